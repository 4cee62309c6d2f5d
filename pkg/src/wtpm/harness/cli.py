"""Command line entry point: ``wtpm run|summarize|gen-data|decompose``."""

import argparse
import csv
import json
import logging
import sys

import numpy as np

from ..errors import ConfigError, ParseError, WTPMError
from ..missingness import estimate_rates
from ..models import estimate_sigma2_complete
from ..spectral import TPMOptions
from ..weighting import compute_weights
from .config import STRATEGY_WEIGHTS, load_config
from .io import _fmt, load_csv, read_results, write_csv, write_results
from .runner import draw_truth, fit, iter_datasets, run_experiment, summarize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _cmd_run(args):
    cfg = load_config(args.config, args.set)
    rt = run_experiment(cfg, workers=args.workers)
    out = args.output or cfg.output
    write_results(rt, out, args.format or cfg.format)
    n_ok = sum(r.status == "ok" for r in rt)
    print(f"wrote {len(rt)} rows ({len(rt) - n_ok} failed) to {out}", file=sys.stderr)
    return EXIT_OK if n_ok or not rt else EXIT_RUNTIME


def _cmd_summarize(args):
    rows = summarize(read_results(args.results))
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        if rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def _cmd_gen_data(args):
    cfg = load_config(args.config, args.set)
    if args.grid_index is None:
        args.grid_index = len(cfg.grid) - 1
    if not 0 <= args.grid_index < len(cfg.grid):
        raise ConfigError(f"grid index {args.grid_index} out of range")
    seed = cfg.seed + args.replication
    data_seed = seed if cfg.data_seed is None else cfg.data_seed
    truth = draw_truth(cfg, data_seed)
    for i, (_, ds) in enumerate(iter_datasets(cfg, truth, data_seed)):
        if i == args.grid_index:
            break
    write_csv(ds, args.output)
    if args.truth_output:
        with open(args.truth_output, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(
                [[format(v, ".17g") for v in row] for row in truth.A]
            )
    print(f"wrote {ds.n_dims} x {ds.n_samples} dataset to {args.output}", file=sys.stderr)
    return EXIT_OK


def _cmd_decompose(args):
    ds = load_csv(args.data)
    comp = np.asarray(args.complete_dims, dtype=int) if args.complete_dims else ds.complete_dims
    p_hat = np.ones(ds.n_dims) if args.strategy == "partial" else estimate_rates(ds.mask)
    w = compute_weights(p_hat, STRATEGY_WEIGHTS[args.strategy], complete_dims=comp)
    opts = TPMOptions(args.restarts, args.max_iters, args.tol, args.seed)
    sigma2 = None
    if args.model == "gm":
        sigma2 = estimate_sigma2_complete(ds.select_dims(comp), args.k)
    est, sr = fit(args.model, ds, w, args.k, opts, sigma2)
    if args.model == "gm":
        payload = {"model": "gm", "means": est.A, "pi": est.pi, "sigma2": est.sigma2}
    else:
        payload = {"model": "gp", "topics": est.A, "c": est.c, "b": est.b}
    payload.update(
        strategy=args.strategy,
        weights=w.w,
        complete_dims=comp,
        eigenvalues=sr.eigenvalues,
        diagnostics=sr.diagnostics,
    )

    def to_json(v):
        if isinstance(v, np.ndarray):
            return [to_json(x) for x in v.tolist()] if v.ndim else to_json(v.item())
        if isinstance(v, list):
            return [to_json(x) for x in v]
        if isinstance(v, float) and not np.isfinite(v):
            return None
        return v

    text = json.dumps({k: to_json(v) for k, v in payload.items()}, indent=1)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="wtpm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("config")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    run.add_argument("-o", "--output")
    run.add_argument("--format", choices=["csv", "json"])
    run.add_argument("--workers", type=int, help="parallel replications (default: $WTPM_THREADS or 1)")
    run.set_defaults(func=_cmd_run)

    summ = sub.add_parser("summarize", help="mean/std per strategy and grid point")
    summ.add_argument("results")
    summ.add_argument("-o", "--output")
    summ.set_defaults(func=_cmd_summarize)

    gen = sub.add_parser("gen-data", help="write one synthetic dataset as CSV")
    gen.add_argument("config")
    gen.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    gen.add_argument("-o", "--output", required=True)
    gen.add_argument("--replication", type=int, default=0)
    gen.add_argument("--grid-index", type=int,
                     help="grid point to emit (default: last)")
    gen.add_argument("--truth-output", help="also write the true parameter matrix")
    gen.set_defaults(func=_cmd_gen_data)

    dec = sub.add_parser("decompose", help="fit a model to a data CSV")
    dec.add_argument("data")
    dec.add_argument("--model", choices=["gm", "gp"], required=True)
    dec.add_argument("--k", type=int, required=True)
    dec.add_argument("--strategy", choices=sorted(STRATEGY_WEIGHTS), default="wtpm-p")
    dec.add_argument("--complete-dims", type=int, nargs="+",
                     help="dimensions to treat as complete (default: fully observed rows)")
    dec.add_argument("--seed", type=int, default=0)
    dec.add_argument("--restarts", type=int, default=25)
    dec.add_argument("--max-iters", type=int, default=200)
    dec.add_argument("--tol", type=float, default=1e-9)
    dec.add_argument("-o", "--output")
    dec.set_defaults(func=_cmd_decompose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WTPMError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

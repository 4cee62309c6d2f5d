"""Replicated comparison of the full, partial and weighted methods."""

import dataclasses
import logging
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import rng
from ..errors import WTPMError
from ..evaluation import epsilon_c, gm_holdout_loglik
from ..missingness import block_mask, estimate_rates, mcar_mask
from ..models import (
    GMParams,
    GPParams,
    estimate_sigma2_complete,
    recover_gm,
    recover_gp,
    sample_gm,
    sample_gp,
)
from ..moments import gm_moments, gp_moments
from ..spectral import TPMOptions, decompose
from ..weighting import compute_weights, weight_moments
from .config import STRATEGY_WEIGHTS
from .io import ResultRow, ResultsTable, load_csv

log = logging.getLogger(__name__)


def draw_truth(cfg, seed):
    """Ground-truth parameters for one replication."""
    gen = rng.generator(seed, rng.TRUTH)
    if cfg.truth == "file":
        ds = load_csv(cfg.truth_file)
        if not ds.mask.all():
            raise WTPMError(f"truth file {cfg.truth_file} has missing entries")
        A = ds.values
        if A.shape != (cfg.D, cfg.K):
            raise WTPMError(f"truth file has shape {A.shape}, config says {(cfg.D, cfg.K)}")
    elif cfg.truth == "random-gaussian":
        A = gen.normal(0.0, np.sqrt(cfg.mean_var), size=(cfg.D, cfg.K))
    else:
        A = gen.dirichlet(np.ones(cfg.D), size=cfg.K).T
    if cfg.model == "gm":
        pi = np.asarray(cfg.pi, dtype=float) if cfg.pi else gen.dirichlet(np.ones(cfg.K))
        return GMParams(A, pi, cfg.sigma2)
    return GPParams(A / A.sum(axis=0), cfg.c_vector(), cfg.b)


def _n_columns(cfg, grid_value):
    return grid_value if cfg.missingness == "mcar" else cfg.n_full + grid_value


def iter_datasets(cfg, truth, data_seed):
    """Yield ``(grid_value, dataset)``; smaller grid points reuse a prefix of
    the columns of larger ones."""
    n_max = max(_n_columns(cfg, g) for g in cfg.grid)
    sampler = sample_gm if cfg.model == "gm" else sample_gp
    full = sampler(truth, n_max, data_seed)
    if cfg.missingness == "mcar":
        mask = mcar_mask(cfg.p, n_max, data_seed)
    for g in cfg.grid:
        n = _n_columns(cfg, g)
        ds = full.select_samples(np.arange(n))
        if cfg.missingness == "mcar":
            ds = ds.with_mask(mask[:, :n])
        else:
            ds = ds.with_mask(block_mask(cfg.n_full, g, cfg.missing_dims, cfg.D))
        yield g, ds


def _split(ds, fraction, seed, grid_value):
    n = ds.n_samples
    n_test = int(round(fraction * n))
    perm = rng.generator(seed, rng.SPLIT, grid_value).permutation(n)
    return ds.select_samples(np.sort(perm[n_test:])), ds.select_samples(np.sort(perm[:n_test]))


def _fail(row, exc):
    row.status = type(exc).__name__
    row.diagnostics["error"] = str(exc)
    return row


def fit(model, ds, w, K, opts, sigma2=None, min_count=3, cache=None):
    """Estimate moments on the dimensions ``w`` keeps, weight, decompose
    and recover.  Returns ``(params, spectral_result)``.

    Moments depend only on the kept dimensions (a restriction of the
    full-dimensional estimate equals the estimate on the restricted data),
    so callers running several strategies can pass a shared ``cache``.
    """
    kept = w.kept
    key = tuple(kept)
    cache = {} if cache is None else cache
    if key not in cache:
        sub = ds.select_dims(kept)
        try:
            if model == "gm":
                cache[key] = gm_moments(sub, sigma2, min_count)
            else:
                cache[key] = gp_moments(sub, min_count)
        except WTPMError as exc:
            cache[key] = exc
    if isinstance(cache[key], WTPMError):
        raise cache[key]
    m = weight_moments(cache[key], w.w[kept])
    sr = decompose(dataclasses.replace(m, dims=kept), K, opts)
    est = recover_gm(sr, w, sigma2) if model == "gm" else recover_gp(sr, w)
    return est, sr


def run_replication(cfg, r):
    """All rows (every grid point and strategy) of replication ``r``."""
    seed = cfg.seed + r
    data_seed = seed if cfg.data_seed is None else cfg.data_seed
    comp = cfg.declared_complete
    opts = TPMOptions(cfg.tpm_restarts, cfg.tpm_max_iters, cfg.tpm_tol, seed)
    truth = draw_truth(cfg, data_seed)
    rows = []
    for g, ds in iter_datasets(cfg, truth, data_seed):
        test = None
        if cfg.holdout_fraction > 0:
            ds, test = _split(ds, cfg.holdout_fraction, seed, g)
        t0 = time.perf_counter()
        shared = {}
        try:
            sigma2 = None
            if cfg.model == "gm":
                sigma2 = estimate_sigma2_complete(ds.select_dims(comp), cfg.K)
                shared["sigma2"] = sigma2
        except WTPMError as exc:
            for s in cfg.strategies:
                rows.append(_fail(ResultRow(s, g, r, seed), exc))
            continue
        t_shared = time.perf_counter() - t0
        cache = {}
        for s in cfg.strategies:
            row = ResultRow(s, g, r, seed, diagnostics=dict(shared, n=ds.n_samples))
            t1 = time.perf_counter()
            try:
                # partial keeps the declared complete dims whatever the rates
                p_hat = np.ones(ds.n_dims) if s == "partial" else estimate_rates(ds.mask)
                w = compute_weights(p_hat, STRATEGY_WEIGHTS[s], complete_dims=comp)
                est, sr = fit(cfg.model, ds, w, cfg.K, opts, sigma2, cfg.min_count, cache)
                row.epsilon_c = epsilon_c(est.A, truth.A, comp)
                if test is not None and cfg.model == "gm":
                    row.holdout_loglik = gm_holdout_loglik(est, test.select_dims(comp), dims=comp)
                row.diagnostics.update(sr.diagnostics)
            except WTPMError as exc:
                _fail(row, exc)
            if cfg.timing:
                row.wall_time_ms = 1e3 * (t_shared + time.perf_counter() - t1)
            rows.append(row)
    return rows


def run_experiment(cfg, workers=None):
    """Run every replication; rows come back in canonical sorted order."""
    workers = cfg.n_workers if workers is None else workers
    reps = range(cfg.replications)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(run_replication, [cfg] * len(reps), reps))
    else:
        chunks = [run_replication(cfg, r) for r in reps]
    rt = ResultsTable(row for chunk in chunks for row in chunk)
    failed = sum(row.status != "ok" for row in rt)
    if failed:
        log.warning("%d of %d rows failed", failed, len(rt))
    return ResultsTable(rt.sorted_rows())


def summarize(rt):
    """Mean and sample standard deviation per ``(strategy, grid_value)``."""
    groups = {}
    for row in rt:
        groups.setdefault((row.strategy, row.grid_value), []).append(row)
    out = []
    for (s, g), rows in sorted(groups.items()):
        ok = [r for r in rows if r.status == "ok"]
        eps = np.array([r.epsilon_c for r in ok], dtype=float)
        ll = np.array([r.holdout_loglik for r in ok], dtype=float)
        ll = ll[np.isfinite(ll)]
        out.append(
            {
                "strategy": s,
                "grid_value": g,
                "n_ok": len(ok),
                "n_failed": len(rows) - len(ok),
                "epsilon_c_mean": float(eps.mean()) if eps.size else float("nan"),
                "epsilon_c_std": float(eps.std(ddof=1)) if eps.size > 1 else float("nan"),
                "holdout_loglik_mean": float(ll.mean()) if ll.size else float("nan"),
                "holdout_loglik_std": float(ll.std(ddof=1)) if ll.size > 1 else float("nan"),
            }
        )
    return out

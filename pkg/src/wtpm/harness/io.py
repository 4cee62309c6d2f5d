"""CSV data files and results tables.

Data CSV: one line per dimension, one column per sample; ``NA`` or an empty
cell marks an unobserved entry.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ParseError
from ..missingness import MaskedDataset

RESULT_COLUMNS = (
    "strategy",
    "grid_value",
    "replication",
    "seed",
    "epsilon_c",
    "holdout_loglik",
    "wall_time_ms",
    "status",
)

_NA = {"", "NA", "na", "NaN", "nan"}


def load_csv(path):
    """Read a data CSV into a :class:`MaskedDataset`."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(csv.reader(fh), start=1):
            if not line or (len(line) == 1 and not line[0].strip()):
                continue
            rows.append((lineno, line))
    if not rows:
        raise ParseError("empty data file")
    width = len(rows[0][1])
    values = np.zeros((len(rows), width))
    mask = np.zeros((len(rows), width), dtype=bool)
    for r, (lineno, line) in enumerate(rows):
        if len(line) != width:
            raise ParseError(f"expected {width} cells, found {len(line)}", line=lineno)
        for col, cell in enumerate(line, start=1):
            cell = cell.strip()
            if cell in _NA:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", line=lineno, col=col) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite cell {cell!r}", line=lineno, col=col)
            values[r, col - 1] = v
            mask[r, col - 1] = True
    return MaskedDataset(values, mask)


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(ds, path):
    """Write a :class:`MaskedDataset` as a data CSV (``NA`` where unobserved)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for vals, obs in zip(ds.values, ds.mask):
            w.writerow([_fmt_value(v) if o else "NA" for v, o in zip(vals, obs)])


def _fmt_value(v):
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return format(v, ".17g")


@dataclass
class ResultRow:
    strategy: str
    grid_value: int
    replication: int
    seed: int
    epsilon_c: float = float("nan")
    holdout_loglik: float = float("nan")
    wall_time_ms: float = float("nan")
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)

    def sort_key(self):
        return (self.strategy, self.grid_value, self.replication)


class ResultsTable(list):
    """List of :class:`ResultRow`; ``sorted_rows`` gives the canonical order."""

    def sorted_rows(self):
        return sorted(self, key=ResultRow.sort_key)

    def select(self, **kw):
        return [r for r in self if all(getattr(r, k) == v for k, v in kw.items())]


def write_results(rt, path, format="csv"):
    rows = sorted(rt, key=ResultRow.sort_key)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            for r in rows:
                w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])
    elif format == "json":
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        payload = [{k: clean(v) for k, v in asdict(r).items()} for r in rows]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        raise ValueError(f"unknown results format {format!r}")


def read_results(path):
    """Parse a results CSV (or JSON) back into a :class:`ResultsTable`."""
    rt = ResultsTable()
    if str(path).endswith(".json"):
        with open(path) as fh:
            for d in json.load(fh):
                d = {k: (float("nan") if v is None and k in ("epsilon_c", "holdout_loglik", "wall_time_ms") else v)
                     for k, v in d.items()}
                rt.append(ResultRow(**d))
        return rt
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty results file") from None
        if tuple(header) != RESULT_COLUMNS:
            raise ParseError(f"unexpected header {header}", line=1)
        for lineno, line in enumerate(reader, start=2):
            if len(line) != len(RESULT_COLUMNS):
                raise ParseError("wrong number of cells", line=lineno)
            d = dict(zip(RESULT_COLUMNS, line))
            try:
                rt.append(
                    ResultRow(
                        strategy=d["strategy"],
                        grid_value=int(d["grid_value"]),
                        replication=int(d["replication"]),
                        seed=int(d["seed"]),
                        epsilon_c=float(d["epsilon_c"]) if d["epsilon_c"] else float("nan"),
                        holdout_loglik=float(d["holdout_loglik"]) if d["holdout_loglik"] else float("nan"),
                        wall_time_ms=float(d["wall_time_ms"]) if d["wall_time_ms"] else float("nan"),
                        status=d["status"],
                    )
                )
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
    return rt

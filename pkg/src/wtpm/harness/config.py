"""Experiment configuration.

A config is a flat TOML document; every key is optional except ``model``,
``D``, ``K`` and ``grid``.  See ``configs/`` and the README for the schema.
"""

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STRATEGY_WEIGHTS = {
    "full": "full",
    "partial": "partial",
    "wtpm-p": "proportional",
    "wtpm-sqrtp": "sqrt",
}

THREADS_ENV = "WTPM_THREADS"


@dataclass
class ExperimentConfig:
    model: str
    D: int
    K: int
    grid: List[int]
    truth: str = ""                 # random-gaussian | random-dirichlet | file
    truth_file: str = ""
    mean_var: float = 100.0         # gm: variance of random means
    sigma2: float = 100.0           # gm: component variance
    pi: List[float] = field(default_factory=list)   # gm: fixed weights, else Dir(1)
    c: List[float] = field(default_factory=lambda: [1.0])
    b: float = 0.02
    missingness: str = "mcar"       # mcar | block
    p: List[float] = field(default_factory=list)
    n_full: int = 0
    missing_dims: List[int] = field(default_factory=list)
    complete_dims: List[int] = field(default_factory=list)
    strategies: List[str] = field(default_factory=lambda: ["full", "partial", "wtpm-p"])
    replications: int = 20
    seed: int = 0
    data_seed: Optional[int] = None
    holdout_fraction: float = 0.0
    min_count: int = 3
    tpm_restarts: int = 25
    tpm_max_iters: int = 200
    tpm_tol: float = 1e-9
    timing: bool = False
    workers: int = 0                # 0: take from $WTPM_THREADS, default 1
    output: str = "results.csv"
    format: str = "csv"

    def __post_init__(self):
        if isinstance(self.c, (int, float)):
            self.c = [float(self.c)]
        if not self.truth:
            self.truth = "random-gaussian" if self.model == "gm" else "random-dirichlet"
        self.validate()

    # -- derived ---------------------------------------------------------
    @property
    def declared_complete(self):
        """Dimensions scored by the error metric and kept by ``partial``."""
        if self.complete_dims:
            return np.array(sorted(self.complete_dims), dtype=int)
        if self.missingness == "mcar":
            return np.flatnonzero(np.asarray(self.p) == 1.0)
        return np.setdiff1d(np.arange(self.D), self.missing_dims)

    @property
    def n_workers(self):
        if self.workers > 0:
            return self.workers
        try:
            return max(1, int(os.environ.get(THREADS_ENV, "1")))
        except ValueError:
            return 1

    def c_vector(self):
        c = np.asarray(self.c, dtype=float)
        return np.full(self.K, c[0]) if c.size == 1 else c

    # -- validation ------------------------------------------------------
    def validate(self):
        def bad(msg):
            raise ConfigError(msg)

        if self.model not in ("gm", "gp"):
            bad(f"model must be 'gm' or 'gp', got {self.model!r}")
        if self.D < 1 or not 1 <= self.K <= self.D:
            bad(f"need 1 <= K <= D, got D={self.D}, K={self.K}")
        if self.truth not in ("random-gaussian", "random-dirichlet", "file"):
            bad(f"unknown truth source {self.truth!r}")
        if self.truth == "file" and not self.truth_file:
            bad("truth = 'file' needs truth_file")
        if not self.strategies:
            bad("strategies must be non-empty")
        for s in self.strategies:
            if s not in STRATEGY_WEIGHTS:
                bad(f"unknown strategy {s!r}; expected one of {sorted(STRATEGY_WEIGHTS)}")
        if len(set(self.strategies)) != len(self.strategies):
            bad("duplicate strategies")
        if not self.grid or any(int(g) < 0 for g in self.grid):
            bad("grid must be a non-empty list of non-negative integers")
        if self.replications < 1:
            bad("replications must be >= 1")
        if self.missingness == "mcar":
            if len(self.p) != self.D:
                bad(f"mcar needs a p vector of length D={self.D}")
            p = np.asarray(self.p, dtype=float)
            if np.any(p <= 0) or np.any(p > 1):
                bad("p entries must lie in (0, 1]")
            if any(int(g) < 1 for g in self.grid):
                bad("mcar grid values are sample counts and must be >= 1")
        elif self.missingness == "block":
            if self.n_full < 1:
                bad("block missingness needs n_full >= 1")
            if any(not 0 <= d < self.D for d in self.missing_dims):
                bad("missing_dims out of range")
        else:
            bad(f"missingness must be 'mcar' or 'block', got {self.missingness!r}")
        comp = self.declared_complete
        if comp.size == 0:
            bad("no complete dimensions")
        if any(not 0 <= d < self.D for d in comp):
            bad("complete_dims out of range")
        if self.missingness == "mcar" and np.any(np.asarray(self.p)[comp] != 1.0):
            bad("declared complete dimensions must have p = 1")
        if self.missingness == "block" and np.intersect1d(comp, self.missing_dims).size:
            bad("declared complete dimensions overlap missing_dims")
        if not 0 <= self.holdout_fraction < 1:
            bad("holdout_fraction must lie in [0, 1)")
        if self.model == "gm":
            if not self.sigma2 > 0:
                bad("sigma2 must be positive")
            if self.pi and (len(self.pi) != self.K or abs(sum(self.pi) - 1) > 1e-9):
                bad("pi must have K entries summing to 1")
        else:
            c = np.asarray(self.c, dtype=float)
            if c.size not in (1, self.K) or np.any(c <= 0) or not self.b > 0:
                bad("c must be a positive scalar or K-vector and b positive")
        if self.format not in ("csv", "json"):
            bad("format must be 'csv' or 'json'")


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def config_from_dict(d):
    unknown = sorted(set(d) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    missing = [k for k in ("model", "D", "K", "grid") if k not in d]
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")
    d = dict(d)
    for key in ("D", "K", "n_full", "replications", "seed", "min_count",
                "tpm_restarts", "tpm_max_iters", "workers"):
        if key in d:
            if isinstance(d[key], bool) or not isinstance(d[key], int):
                raise ConfigError(f"{key} must be an integer")
    if "grid" in d:
        d["grid"] = [int(g) for g in d["grid"]]
    try:
        return ExperimentConfig(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_override(text):
    """``key=value`` with ``value`` parsed as a TOML value (bare strings allowed)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def load_config(path, overrides=()):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    for item in overrides:
        key, value = parse_override(item)
        data[key] = value
    base = os.path.dirname(os.path.abspath(path))
    if data.get("truth_file") and not os.path.isabs(data["truth_file"]):
        data["truth_file"] = os.path.join(base, data["truth_file"])
    return config_from_dict(data)

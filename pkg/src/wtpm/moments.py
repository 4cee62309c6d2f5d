"""Moment estimation from partially observed data.

Every entry of a second- or third-order estimate uses exactly the samples
in which all of its dimensions are observed (pairwise / triplewise
deletion).  Central moments use *local* means, i.e. means over that same
jointly observed subset, and plug-in ``1/n`` normalisation.

The model-specific tensors are

* spherical Gaussian mixture (raw moments)::

      S = E[x x] - sigma2 I
      T = E[x x x] - sum_i sigma2 (m e_i e_i + e_i m e_i + e_i e_i m)

* Gamma-Poisson (central moments)::

      S = cov(x, x) - diag(E[x])
      T_ijk = cum(x_i, x_j, x_k) + 2 d_ijk E[x_i]
              - d_jk cov(x_i, x_j) - d_ik cov(x_i, x_j) - d_ij cov(x_i, x_k)
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDimension,
    InsufficientPairData,
    InsufficientTripleData,
    InvalidInput,
    ShapeError,
)
from .tensors import SymMatrix, SymTensor3

#: minimum joint observation count for central moment entries
MIN_COUNT = 3

_CHUNK = 8192


@dataclass(frozen=True)
class MomentPair:
    """Second-order matrix ``S`` and third-order tensor ``T`` of a model.

    ``dims`` holds the original dimension index of every row, which differs
    from ``arange(D)`` once a moment pair has been restricted to a subset of
    dimensions.  Counts are ``None`` for analytic (population) moments.
    """

    S: SymMatrix
    T: SymTensor3
    mean: np.ndarray
    pair_counts: np.ndarray = None
    triple_counts: np.ndarray = None
    dims: np.ndarray = field(default=None)

    def __post_init__(self):
        S = self.S if isinstance(self.S, SymMatrix) else SymMatrix(self.S)
        T = self.T if isinstance(self.T, SymTensor3) else SymTensor3(self.T)
        if T.dim != S.dim:
            raise ShapeError(f"S has dim {S.dim} but T has dim {T.dim}")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        dims = np.arange(S.dim) if self.dims is None else np.asarray(self.dims, dtype=int)
        if dims.shape != (S.dim,):
            raise ShapeError("dims must list one original index per row")
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.S.dim


def _triple_sums(P, Q, R):
    """``out[i, j, k] = sum_n P[i, n] Q[j, n] R[k, n]``, chunked over samples."""
    D, N = P.shape
    out = np.zeros((D * D, D))
    for start in range(0, N, _CHUNK):
        sl = slice(start, start + _CHUNK)
        pq = (P[:, None, sl] * Q[None, :, sl]).reshape(D * D, -1)
        out += pq @ R[:, sl].T
    return out.reshape(D, D, D)


def _mask_float(ds):
    return ds.mask.astype(float)


def _pair_counts(ds):
    m = _mask_float(ds)
    return np.rint(m @ m.T).astype(np.int64)


def _triple_counts(ds):
    m = _mask_float(ds)
    return np.rint(_triple_sums(m, m, m)).astype(np.int64)


def _require_pairs(counts, min_count):
    bad = np.argwhere(counts < min_count)
    if bad.size:
        i, j = sorted(bad[0])
        raise InsufficientPairData(i, j, counts[i, j], min_count)


def _require_triples(counts, min_count):
    bad = np.argwhere(counts < min_count)
    if bad.size:
        i, j, k = sorted(bad[0])
        raise InsufficientTripleData(i, j, k, counts[i, j, k], min_count)


def masked_mean(ds):
    """Per-dimension mean over observed entries."""
    counts = ds.observed_counts()
    if np.any(counts == 0):
        raise DegenerateDimension(np.flatnonzero(counts == 0))
    return ds.values.sum(axis=1) / counts


def masked_raw_moment2(ds, min_count=1):
    """``E[x_i x_j]`` over samples where both ``i`` and ``j`` are observed.

    Returns
    -------
    (SymMatrix, ndarray of int)
        The moment matrix and the pair observation counts.
    """
    counts = _pair_counts(ds)
    _require_pairs(counts, min_count)
    x = ds.values
    return SymMatrix((x @ x.T) / counts), counts


def masked_raw_moment3(ds, min_count=1):
    """``E[x_i x_j x_k]`` over samples where all three are observed."""
    counts = _triple_counts(ds)
    _require_triples(counts, min_count)
    x = ds.values
    return SymTensor3(_triple_sums(x, x, x) / counts), counts


def _centered(ds):
    # cumulants are shift invariant; removing the global mean first keeps
    # the expanded local-mean formulas well conditioned
    return np.where(ds.mask, ds.values - masked_mean(ds)[:, None], 0.0)


def masked_cov(ds, min_count=MIN_COUNT):
    """Pairwise-deletion covariance with pairwise (local) means."""
    counts = _pair_counts(ds)
    _require_pairs(counts, min_count)
    y = _centered(ds)
    m = _mask_float(ds)
    ym = (y @ m.T) / counts           # ym[i, j]: mean of y_i where i and j observed
    cov = (y @ y.T) / counts - ym * ym.T
    return SymMatrix(cov), counts


def masked_cum3(ds, min_count=MIN_COUNT):
    """Third cross-cumulant over triplewise-complete samples, local means."""
    counts = _triple_counts(ds)
    _require_triples(counts, min_count)
    y = _centered(ds)
    m = _mask_float(ds)
    n = counts.astype(float)
    yyy = _triple_sums(y, y, y) / n
    ymm = _triple_sums(y, m, m) / n   # mean of y_i on the (i, j, k) subset
    yym = _triple_sums(y, y, m) / n   # E[y_i y_j] on the (i, j, k) subset
    a = ymm
    b = np.einsum("jik->ijk", ymm)
    c = np.einsum("kij->ijk", ymm)
    e_ij = yym
    e_ik = np.einsum("ikj->ijk", yym)
    e_jk = np.einsum("jki->ijk", yym)
    cum = yyy - c * e_ij - b * e_ik - a * e_jk + 2.0 * a * b * c
    return SymTensor3(cum), counts


def assemble_gm(mean, m2, m3, sigma2):
    """Gaussian-mixture ``(S, T)`` from raw moments.

    ``sigma2`` is a scalar for spherical components or a length-``D``
    vector of per-dimension variances.
    """
    mean = np.asarray(mean, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    m3 = np.asarray(m3, dtype=float)
    s = np.broadcast_to(np.asarray(sigma2, dtype=float), mean.shape)
    if np.any(s < 0):
        raise InvalidInput("variance must be non-negative")
    ds = np.diag(s)
    S = m2 - ds
    corr = (
        np.einsum("a,bc->abc", mean, ds)
        + np.einsum("b,ac->abc", mean, ds)
        + np.einsum("c,ab->abc", mean, ds)
    )
    return SymMatrix(S), SymTensor3(m3 - corr)


def assemble_gp(mean, cov, cum3):
    """Gamma-Poisson ``(S, T)`` from mean, covariance and third cumulant."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    cum3 = np.asarray(cum3, dtype=float)
    D = mean.size
    eye = np.eye(D)
    S = cov - np.diag(mean)
    delta3 = np.einsum("i,ij,ik->ijk", mean, eye, eye)
    T = (
        cum3
        + 2.0 * delta3
        - np.einsum("ij,jk->ijk", cov, eye)
        - np.einsum("ij,ik->ijk", cov, eye)
        - np.einsum("ik,ij->ijk", cov, eye)
    )
    return SymMatrix(S), SymTensor3(T)


def gm_moments(ds, sigma2, min_count=MIN_COUNT):
    """Spherical Gaussian mixture moment pair from a masked dataset."""
    if not np.isfinite(sigma2) or sigma2 < 0:
        raise InvalidInput(f"sigma2 must be a non-negative number, got {sigma2}")
    mean = masked_mean(ds)
    m2, pc = masked_raw_moment2(ds, min_count)
    m3, tc = masked_raw_moment3(ds, min_count)
    S, T = assemble_gm(mean, m2, m3, sigma2)
    return MomentPair(S, T, mean, pc, tc)


def _check_counts_data(ds):
    x = ds.values[ds.mask]
    if np.any(x < 0) or np.any(x != np.round(x)):
        raise InvalidInput("Gamma-Poisson data must be non-negative integers")


def gp_moments(ds, min_count=MIN_COUNT):
    """Gamma-Poisson moment pair from a masked count dataset."""
    _check_counts_data(ds)
    mean = masked_mean(ds)
    cov, pc = masked_cov(ds, min_count)
    cum, tc = masked_cum3(ds, min_count)
    S, T = assemble_gp(mean, cov, cum)
    return MomentPair(S, T, mean, pc, tc)

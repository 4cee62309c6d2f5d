"""Per-dimension weights and their application to moment tensors.

Weighting multiplies ``S_ij`` by ``w_i w_j`` and ``T_ijk`` by
``w_i w_j w_k``.  Because the weights factor over dimensions the weighted
tensors keep their rank-``K`` structure with rescaled components
``a*_dk = w_d a_dk``; recovered components are mapped back by dividing
row ``d`` by ``w_d``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, ShapeError
from .missingness import check_probabilities
from .moments import MomentPair

STRATEGIES = ("full", "partial", "proportional", "sqrt")


@dataclass(frozen=True)
class WeightVector:
    w: np.ndarray
    strategy: str

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise InvalidInput(f"weights must lie in [0, 1], got {w}")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @property
    def kept(self):
        """Indices of dimensions that take part in the decomposition."""
        return np.flatnonzero(self.w > 0)

    def __len__(self):
        return self.w.size


def compute_weights(p, strategy="proportional", complete_dims=None):
    """Weights for presence probabilities ``p``.

    ``full`` uses every dimension unweighted, ``partial`` keeps only the
    complete dimensions, ``proportional`` sets ``w_d = p_d`` and ``sqrt``
    sets ``w_d = sqrt(p_d)``.  Complete dimensions (``p_d = 1``) get weight 1
    under every strategy.

    ``complete_dims`` overrides which dimensions ``partial`` keeps; by
    default they are the ones with ``p_d == 1``.
    """
    p = check_probabilities(p)
    if strategy == "full":
        w = np.ones_like(p)
    elif strategy == "partial":
        if complete_dims is None:
            w = (p == 1.0).astype(float)
        else:
            w = np.zeros_like(p)
            w[np.asarray(complete_dims, dtype=int)] = 1.0
        if not w.any():
            raise InvalidInput("partial strategy needs at least one complete dimension")
    elif strategy == "proportional":
        w = p.copy()
    elif strategy == "sqrt":
        w = np.sqrt(p)
    else:
        raise InvalidInput(f"unknown weighting strategy {strategy!r}; expected one of {STRATEGIES}")
    return WeightVector(w, strategy)


def weight_moments(m, w):
    """Element-wise weighted moment pair.

    Dimensions with zero weight (the ``partial`` strategy) are removed, so
    the result has reduced dimensionality and ``dims`` records which
    original dimensions remain.  Counts are carried through unchanged.
    """
    wv = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if wv.shape != (m.dim,):
        raise ShapeError(f"weight vector of length {wv.size} for moments of dim {m.dim}")
    keep = np.flatnonzero(wv > 0)
    S = m.S.entries
    T = m.T.entries
    pc, tc = m.pair_counts, m.triple_counts
    if keep.size < m.dim:
        S = S[np.ix_(keep, keep)]
        T = T[np.ix_(keep, keep, keep)]
        pc = None if pc is None else pc[np.ix_(keep, keep)]
        tc = None if tc is None else tc[np.ix_(keep, keep, keep)]
    wk = wv[keep]
    S_star = S * np.outer(wk, wk)
    T_star = T * np.einsum("i,j,k->ijk", wk, wk, wk)
    return MomentPair(
        S_star, T_star, m.mean[keep] * wk, pc, tc, dims=m.dims[keep]
    )


def unweight_topics(a_star, w):
    """Divide row ``d`` of the recovered matrix by ``w_d``.

    ``a_star`` has either one row per dimension or one row per kept
    (non-zero weight) dimension.  Rows of zero-weight dimensions come back
    as NaN: they were not estimated.
    """
    wv = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    a_star = np.asarray(a_star, dtype=float)
    if a_star.ndim == 1:
        a_star = a_star[:, None]
    keep = np.flatnonzero(wv > 0)
    if a_star.shape[0] == wv.size:
        rows = a_star[keep]
    elif a_star.shape[0] == keep.size:
        rows = a_star
    else:
        raise ShapeError(
            f"matrix has {a_star.shape[0]} rows; expected {wv.size} or {keep.size}"
        )
    out = np.full((wv.size, a_star.shape[1]), np.nan)
    out[keep] = rows / wv[keep][:, None]
    return out

"""Observation masks, masked datasets and empirical presence rates.

A mask is a ``(D, N)`` boolean array, ``True`` where the entry was observed.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import DegenerateDimension, InvalidInput, ShapeError


def check_probabilities(p):
    """Validate presence probabilities, ``0 < p_d <= 1``."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0:
        raise InvalidInput("empty probability vector")
    if not np.all(np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
        raise InvalidInput(f"presence probabilities must lie in (0, 1], got {p}")
    return p


@dataclass(frozen=True)
class MaskedDataset:
    """``D x N`` data matrix with its observation mask.

    Unobserved entries are stored as 0 whatever value was passed in, so
    that every consumer can ignore them by construction.
    """

    values: np.ndarray
    mask: np.ndarray
    complete_dims: np.ndarray = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask)
        if values.ndim != 2:
            raise ShapeError(f"values must be a D x N matrix, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ShapeError(f"mask shape {mask.shape} does not match values {values.shape}")
        if mask.dtype != bool:
            if not np.all((mask == 0) | (mask == 1)):
                raise InvalidInput("mask must be boolean")
            mask = mask.astype(bool)
        values = np.where(mask, values, 0.0)
        if not np.all(np.isfinite(values)):
            raise InvalidInput("observed values must be finite")
        values.flags.writeable = False
        mask = mask.copy()
        mask.flags.writeable = False
        complete = np.flatnonzero(mask.all(axis=1))
        complete.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "complete_dims", complete)

    @classmethod
    def fully_observed(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values, np.ones(values.shape, dtype=bool))

    @property
    def n_dims(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]

    def with_mask(self, mask):
        """Same values, new mask (entries already hidden stay hidden)."""
        mask = np.asarray(mask, dtype=bool)
        return MaskedDataset(self.values, mask & self.mask)

    def select_dims(self, dims):
        dims = np.asarray(dims, dtype=int)
        return MaskedDataset(self.values[dims], self.mask[dims])

    def select_samples(self, cols):
        cols = np.asarray(cols)
        return MaskedDataset(self.values[:, cols], self.mask[:, cols])

    def observed_counts(self):
        return self.mask.sum(axis=1)


def mcar_mask(p, n, rng_seed):
    """Mask with entry ``(d, n)`` observed independently with probability ``p[d]``.

    Columns are drawn in blocks with independent substreams, so
    ``mcar_mask(p, n, s)`` is a prefix of ``mcar_mask(p, m, s)`` for
    ``m > n``.
    """
    p = check_probabilities(p)
    n = int(n)
    if n < 1:
        raise InvalidInput("need at least one sample")
    return rng.blockwise(
        n, rng_seed, rng.MASK, lambda gen, size: gen.random((p.size, size)) < p[:, None]
    )


def block_mask(n_full, n_partial, missing_dims, D):
    """``n_full`` fully observed columns followed by ``n_partial`` columns
    that lack exactly the dimensions in ``missing_dims``."""
    missing = np.unique(np.asarray(list(missing_dims), dtype=int))
    if missing.size and (missing.min() < 0 or missing.max() >= D):
        raise InvalidInput(f"missing dims {missing.tolist()} out of range for D={D}")
    if n_full < 0 or n_partial < 0:
        raise InvalidInput("column counts must be non-negative")
    mask = np.ones((D, n_full + n_partial), dtype=bool)
    mask[np.ix_(missing, np.arange(n_full, n_full + n_partial))] = False
    return mask


def estimate_rates(mask):
    """Fraction of samples in which each dimension is observed."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.shape[1] == 0:
        raise ShapeError(f"expected a non-empty D x N mask, got shape {mask.shape}")
    counts = mask.sum(axis=1)
    if np.any(counts == 0):
        raise DegenerateDimension(np.flatnonzero(counts == 0))
    return counts / mask.shape[1]

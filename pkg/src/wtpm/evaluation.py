"""Reconstruction error on complete dimensions and held-out likelihood."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import InvalidInput, ShapeError


@dataclass(frozen=True)
class MatchResult:
    """``permutation[k]`` is the estimated column matched to true column ``k``."""

    permutation: np.ndarray
    angles: np.ndarray

    @property
    def total(self):
        return float(self.angles.sum())


def angle_matrix(A_hat, A_true):
    """``out[i, j]``: angle in ``[0, pi]`` between ``A_hat[:, i]`` and ``A_true[:, j]``."""
    A_hat = np.atleast_2d(np.asarray(A_hat, dtype=float))
    A_true = np.atleast_2d(np.asarray(A_true, dtype=float))
    if A_hat.shape != A_true.shape:
        raise ShapeError(f"shapes differ: {A_hat.shape} vs {A_true.shape}")
    if not (np.all(np.isfinite(A_hat)) and np.all(np.isfinite(A_true))):
        raise InvalidInput("matrices contain non-finite entries")
    nh = np.linalg.norm(A_hat, axis=0)
    nt = np.linalg.norm(A_true, axis=0)
    if np.any(nh == 0) or np.any(nt == 0):
        raise InvalidInput("zero column")
    u = (A_hat / nh)[:, :, None]
    v = (A_true / nt)[:, None, :]
    # equals arccos(u . v) but keeps full precision near 0 and pi
    return 2.0 * np.arctan2(np.linalg.norm(u - v, axis=0), np.linalg.norm(u + v, axis=0))


def match_columns(A_hat, A_true):
    """Column bijection minimising the total angle (exact assignment)."""
    cost = angle_matrix(A_hat, A_true)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[1], dtype=int)
    perm[cols] = rows
    return MatchResult(perm, cost[perm, np.arange(cost.shape[1])])


def epsilon_c(A_hat, A_true, complete_dims=None):
    """Sum of angles between matched columns, restricted to ``complete_dims``.

    No absolute value is taken: a sign-flipped column scores ``pi``.
    """
    A_hat = np.atleast_2d(np.asarray(A_hat, dtype=float))
    A_true = np.atleast_2d(np.asarray(A_true, dtype=float))
    if complete_dims is not None:
        dims = np.asarray(complete_dims, dtype=int)
        A_hat, A_true = A_hat[dims], A_true[dims]
    return match_columns(A_hat, A_true).total


def gm_holdout_loglik(params, ds, dims=None):
    """``sum_n log sum_k pi_k N(x_n; a_k, sigma2 I)`` over the columns of ``ds``.

    ``dims`` selects the rows of ``params.A`` matching the rows of ``ds``
    (default: all).  The data must be fully observed.
    """
    if not params.sigma2 > 0:
        raise InvalidInput("sigma2 must be positive")
    if not ds.mask.all():
        raise InvalidInput("held-out data must be fully observed on the scored dimensions")
    A = params.A if dims is None else params.A[np.asarray(dims, dtype=int)]
    x = ds.values
    if A.shape[0] != x.shape[0]:
        raise ShapeError(f"{A.shape[0]} mean rows for {x.shape[0]}-dim data")
    if not np.all(np.isfinite(A)):
        raise InvalidInput("means are not estimated on every scored dimension")
    D = x.shape[0]
    s2 = params.sigma2
    sq = (
        np.sum(x**2, axis=0)[:, None]
        - 2.0 * x.T @ A
        + np.sum(A**2, axis=0)[None, :]
    )
    log_comp = np.log(params.pi)[None, :] - 0.5 * sq / s2 - 0.5 * D * np.log(2 * np.pi * s2)
    return float(np.sum(logsumexp(log_comp, axis=1)))

"""Whitening, tensor power method with deflation, and unwhitening.

Given ``S = sum_k s_k a_k a_k^T`` and ``T = sum_k t_k a_k^{(x)3}``, a
whitening matrix ``W`` with ``W^T S W = I_K`` turns ``T(W, W, W)`` into an
orthogonally decomposable ``K x K x K`` tensor whose eigenpairs
``(lambda_k, v_k)`` map back to ``lambda_k pinv(W^T) v_k``, a column
proportional to ``a_k``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConvergenceFailure, InvalidInput, RankDeficient, ShapeError
from .tensors import SymTensor3, pseudoinverse, sym_eig, tensor_contract


@dataclass(frozen=True)
class TPMOptions:
    restarts: int = 25
    max_iters: int = 200
    tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1 or not self.tol > 0:
            raise InvalidInput("restarts and max_iters must be >= 1 and tol > 0")


@dataclass(frozen=True)
class WhiteningMap:
    W: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class TPMResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray   # (K, K), column k is v_k
    iterations: np.ndarray     # iterations used by the selected restart
    residuals: np.ndarray      # ||T_k(I, v, v) - lambda v|| on the deflated tensor
    restarts_converged: np.ndarray


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    A_hat: np.ndarray
    whitening: WhiteningMap
    dims: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def whiten(S, K, eps_rel=1e-10):
    """Whitening matrix ``W = U_K diag(lambda_K)^{-1/2}`` from the top ``K``
    eigenpairs of ``S``.

    Raises
    ------
    RankDeficient
        If the ``K``-th eigenvalue is not above ``eps_rel * lambda_max``.
    """
    eig = sym_eig(S)
    D = eig.eigenvalues.size
    K = int(K)
    if K < 1 or K > D:
        raise ShapeError(f"cannot whiten to rank {K} in dimension {D}")
    lam_max = eig.eigenvalues[0]
    threshold = eps_rel * lam_max if lam_max > 0 else 0.0
    above = int(np.sum(eig.eigenvalues > threshold)) if lam_max > 0 else 0
    if above < K:
        raise RankDeficient(K, above)
    lam = eig.eigenvalues[:K]
    W = eig.eigenvectors[:, :K] / np.sqrt(lam)
    return WhiteningMap(W, lam.copy())


def _apply_vec(T, theta):
    """``T(I, theta, theta)`` for a batch of row vectors ``theta``."""
    return np.einsum("ijk,rj,rk->ri", T, theta, theta)


def _power_iterate(T, theta, max_iters, tol):
    theta = theta / np.linalg.norm(theta, axis=1, keepdims=True)
    active = np.ones(theta.shape[0], dtype=bool)
    converged = np.zeros(theta.shape[0], dtype=bool)
    iters = np.zeros(theta.shape[0], dtype=int)
    step = np.full(theta.shape[0], np.inf)
    for _ in range(max_iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        new = _apply_vec(T, theta[idx])
        norms = np.linalg.norm(new, axis=1)
        dead = norms == 0
        if dead.any():
            active[idx[dead]] = False
            idx, new, norms = idx[~dead], new[~dead], norms[~dead]
        new /= norms[:, None]
        delta = np.linalg.norm(new - theta[idx], axis=1)
        theta[idx] = new
        iters[idx] += 1
        step[idx] = delta
        done = delta < tol
        converged[idx[done]] = True
        active[idx[done]] = False
    return theta, converged, iters, step


def tpm(Tc, K, opts=None):
    """Robust tensor power method with deflation.

    For each of ``K`` components, ``opts.restarts`` random unit vectors are
    iterated with ``theta <- T(I, theta, theta) / ||T(I, theta, theta)||``
    until the step is below ``opts.tol``; among converged restarts the one
    with the largest ``lambda = T(theta, theta, theta)`` is kept (ties go to
    the lowest restart index) and ``lambda theta^{(x)3}`` is subtracted.
    Negative eigenvalues are made positive by flipping ``theta``.
    """
    opts = opts or TPMOptions()
    T = np.array(Tc, dtype=float)
    if T.ndim != 3 or len(set(T.shape)) != 1:
        raise ShapeError(f"expected a cubic tensor, got shape {T.shape}")
    n = T.shape[0]
    K = int(K)
    if K < 1 or K > n:
        raise ShapeError(f"cannot extract {K} components from a {n}-dim tensor")
    lams = np.zeros(K)
    vecs = np.zeros((n, K))
    iters = np.zeros(K, dtype=int)
    resid = np.zeros(K)
    n_conv = np.zeros(K, dtype=int)
    for k in range(K):
        gen = rng.generator(opts.seed, rng.TPM, k)
        starts = gen.standard_normal((opts.restarts, n))
        theta, conv, its, step = _power_iterate(T, starts, opts.max_iters, opts.tol)
        if not conv.any():
            raise ConvergenceFailure(k, np.nanmin(step))
        lam = np.einsum("ri,ri->r", _apply_vec(T, theta), theta)
        flip = lam < 0
        theta[flip] *= -1
        lam = np.abs(lam)
        cand = np.where(conv, lam, -np.inf)
        best = int(np.argmax(cand))  # first maximum: lowest restart index
        v, l = theta[best], lam[best]
        resid[k] = np.linalg.norm(_apply_vec(T, v[None])[0] - l * v)
        lams[k], vecs[:, k], iters[k], n_conv[k] = l, v, its[best], conv.sum()
        T = T - l * np.einsum("i,j,k->ijk", v, v, v)
    return TPMResult(lams, vecs, iters, resid, n_conv)


def unwhiten(eigenvalues, eigenvectors, wm):
    """Columns ``lambda_k pinv(W^T) v_k``."""
    lam = np.asarray(eigenvalues, dtype=float)
    V = np.asarray(eigenvectors, dtype=float)
    W = wm.W if isinstance(wm, WhiteningMap) else np.asarray(wm, dtype=float)
    if V.shape != (W.shape[1], lam.size):
        raise ShapeError(
            f"eigenvectors {V.shape} incompatible with whitening {W.shape} and {lam.size} eigenvalues"
        )
    return pseudoinverse(W.T) @ (V * lam)


def decompose(m, K, opts=None):
    """Whiten ``m.S``, contract ``m.T``, run the power method and unwhiten."""
    opts = opts or TPMOptions()
    wm = whiten(m.S, K)
    Tc = SymTensor3(tensor_contract(m.T, wm.W, wm.W, wm.W))
    res = tpm(Tc, K, opts)
    A_hat = unwhiten(res.eigenvalues, res.eigenvectors, wm)
    diagnostics = {
        "iterations": res.iterations.tolist(),
        "residuals": res.residuals.tolist(),
        "restarts_converged": res.restarts_converged.tolist(),
    }
    return SpectralResult(res.eigenvalues, res.eigenvectors, A_hat, wm, m.dims.copy(), diagnostics)

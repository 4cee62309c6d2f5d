"""Spherical Gaussian mixture and Gamma-Poisson models: parameters,
samplers, population moments and recovery from a decomposition."""

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidInput, NotIdentifiable, RecoveryError
from .missingness import MaskedDataset
from .moments import MomentPair, assemble_gm, assemble_gp, masked_cov
from .weighting import unweight_topics

# recovered GP entries in (-NEG_CLAMP * colmax, 0) are round-off and set to 0
NEG_CLAMP = 1e-8


@dataclass(frozen=True)
class GMParams:
    """Mixture of spherical Gaussians ``N(a_k, sigma2 I)`` with weights ``pi``.

    Rows of ``A`` may be NaN for dimensions that were not estimated.
    ``row_weights`` records the weights used during recovery; rows with
    weight below one were amplified on unweighting and are less reliable.
    """

    A: np.ndarray
    pi: np.ndarray
    sigma2: float
    row_weights: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        pi = np.asarray(self.pi, dtype=float).ravel()
        if A.shape[1] != pi.size:
            raise InvalidInput(f"{A.shape[1]} components but {pi.size} mixing weights")
        if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-9:
            raise InvalidInput("mixing weights must be positive and sum to 1")
        if not self.sigma2 > 0:
            raise InvalidInput("sigma2 must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def K(self):
        return self.pi.size

    @property
    def D(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class GPParams:
    """Gamma-Poisson model: ``alpha_k ~ Gamma(c_k, rate b)``,
    ``x_d ~ Poisson([A alpha]_d)``, columns of ``A`` summing to one."""

    A: np.ndarray
    c: np.ndarray
    b: float
    row_weights: np.ndarray = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        c = np.asarray(self.c, dtype=float).ravel()
        if A.shape[1] != c.size:
            raise InvalidInput(f"{A.shape[1]} topics but {c.size} shape parameters")
        if np.any(c <= 0) or not self.b > 0:
            raise InvalidInput("c and b must be positive")
        if np.any(A < 0):
            raise InvalidInput("topics must be non-negative")
        sums = np.nansum(A, axis=0)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise InvalidInput(f"topic columns must sum to 1, got {sums}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def recovered(cls, A, c, b, row_weights=None):
        """Build from estimates without the non-negativity check.

        Noisy recoveries can keep genuinely negative topic entries; they are
        left visible (see ``negative_entries``) instead of being rejected.
        """
        obj = object.__new__(cls)
        for name, value in (("A", A), ("c", c), ("b", float(b)), ("row_weights", row_weights)):
            object.__setattr__(obj, name, value)
        return obj

    @property
    def negative_entries(self):
        return int(np.sum(self.A < 0))

    @property
    def K(self):
        return self.c.size

    @property
    def D(self):
        return self.A.shape[0]

    @property
    def s(self):
        """``var(alpha_k) = c_k / b^2``."""
        return self.c / self.b**2

    @property
    def t(self):
        """``cum3(alpha_k) = 2 c_k / b^3``."""
        return 2.0 * self.c / self.b**3

    @property
    def L(self):
        """Mean document length ``sum_k c_k / b``."""
        return self.c.sum() / self.b


def random_gm_params(D, K, seed, mean_var=100.0, sigma2=100.0):
    """Means ``A_ij ~ N(0, mean_var)``, ``pi ~ Dir(1)``."""
    gen = rng.generator(seed, rng.TRUTH)
    A = gen.normal(0.0, np.sqrt(mean_var), size=(D, K))
    pi = gen.dirichlet(np.ones(K))
    return GMParams(A, pi, sigma2)


def random_gp_params(D, K, seed, c=1.0, b=1.0):
    """Topics drawn column-wise from ``Dir(1)``."""
    gen = rng.generator(seed, rng.TRUTH)
    A = gen.dirichlet(np.ones(D), size=K).T
    A = A / A.sum(axis=0)
    return GPParams(A, np.broadcast_to(np.asarray(c, dtype=float), (K,)).copy(), b)


def sample_gm(params, n, rng_seed, return_labels=False):
    """Draw ``n`` fully observed samples; columns are generated in blocks
    with independent substreams."""
    A, pi, sd = params.A, params.pi, np.sqrt(params.sigma2)
    D, K = A.shape

    def draw(gen, size):
        h = gen.choice(K, size=size, p=pi)
        x = A[:, h] + sd * gen.standard_normal((D, size))
        return np.vstack([x, h[None, :]])

    out = rng.blockwise(int(n), rng_seed, rng.DATA, draw)
    ds = MaskedDataset.fully_observed(out[:D])
    if return_labels:
        return ds, out[D].astype(int)
    return ds


def sample_gp(params, n, rng_seed):
    """Draw ``n`` fully observed count vectors."""
    A, c, b = params.A, params.c, params.b

    def draw(gen, size):
        alpha = gen.gamma(shape=c[:, None], scale=1.0 / b, size=(c.size, size))
        return gen.poisson(A @ alpha).astype(float)

    return MaskedDataset.fully_observed(rng.blockwise(int(n), rng_seed, rng.DATA, draw))


def gm_raw_moments(A, pi, var):
    """``E[x]``, ``E[x x]`` and ``E[x x x]`` of a Gaussian mixture whose
    components have diagonal covariance ``diag(var)``."""
    A = np.asarray(A, dtype=float)
    pi = np.asarray(pi, dtype=float)
    D = A.shape[0]
    var = np.broadcast_to(np.asarray(var, dtype=float), (D,))
    m1 = A @ pi
    m2 = np.diag(var).copy()
    m3 = np.zeros((D, D, D))
    for k in range(pi.size):
        a = A[:, k]
        m2 += pi[k] * np.outer(a, a)
        # E[(a + e)^{x3}] for e ~ N(0, diag(var)): odd moments of e vanish
        cube = np.einsum("i,j,k->ijk", a, a, a)
        for d in range(D):
            cube[d, d, :] += var[d] * a
            cube[d, :, d] += var[d] * a
            cube[:, d, d] += var[d] * a
        m3 += pi[k] * cube
    return m1, m2, m3


def gm_population_moments(params):
    """Exact ``(S, T)`` a Gaussian-mixture estimator converges to."""
    m1, m2, m3 = gm_raw_moments(params.A, params.pi, params.sigma2)
    S, T = assemble_gm(m1, m2, m3, params.sigma2)
    return MomentPair(S, T, m1)


def gp_population_moments(params):
    """Exact ``(S, T)`` for a Gamma-Poisson model, built from the analytic
    mean, covariance and third cumulant of the counts."""
    A, s, t = params.A, params.s, params.t
    D = params.D
    mean = A @ params.c / params.b
    cov_rate = (A * s) @ A.T
    cum_rate = np.einsum("ik,jk,lk,k->ijl", A, A, A, t)
    cov = cov_rate + np.diag(mean)
    cum = cum_rate.copy()
    for i in range(D):
        # Poisson layer: cum(x_i, x_j, x_k) picks up rate covariances on
        # every diagonal slice and the rate mean on the main diagonal
        cum[i, i, :] += cov_rate[i, :]
        cum[i, :, i] += cov_rate[i, :]
        cum[:, i, i] += cov_rate[:, i]
        cum[i, i, i] += mean[i]
    S, T = assemble_gp(mean, cov, cum)
    return MomentPair(S, T, mean)


def estimate_sigma2_complete(ds, K):
    """Mean of the ``D_c - K`` smallest eigenvalues of the covariance of the
    complete dimensions."""
    dims = ds.complete_dims
    if dims.size <= K:
        raise NotIdentifiable(
            f"{dims.size} complete dimensions cannot identify sigma2 with K={K}"
        )
    cov, _ = masked_cov(ds.select_dims(dims), min_count=1)
    eig = np.linalg.eigvalsh(cov.entries)  # ascending
    return float(np.mean(eig[: dims.size - K]))


def recover_gm(sr, w, sigma2):
    """Means, mixing weights and variance from a Gaussian-mixture decomposition."""
    lam = np.asarray(sr.eigenvalues, dtype=float)
    if np.any(lam <= 0):
        raise RecoveryError("non-positive eigenvalue", component=int(np.argmin(lam)))
    pi = 1.0 / lam**2
    pi = pi / pi.sum()
    A = unweight_topics(sr.A_hat, w)
    return GMParams(A, pi, sigma2, row_weights=np.asarray(getattr(w, "w", w), dtype=float))


def recover_gp(sr, w):
    """Topics and ``(c, b)`` from a Gamma-Poisson decomposition.

    A recovered column equals ``(t_k / s_k) a_k`` and the eigenvalue is
    ``t_k / s_k^{3/2}``, so with ``r_k`` the column sum,
    ``s_k = (r_k / lambda_k)^2``, ``t_k = r_k s_k``, ``b = 2 s_k / t_k``
    (averaged over topics) and ``c_k = s_k b^2``.
    """
    lam = np.asarray(sr.eigenvalues, dtype=float)
    A = unweight_topics(sr.A_hat, w)
    colmax = np.nanmax(np.abs(A), axis=0)
    small = (A < 0) & (A > -NEG_CLAMP * colmax)
    A = np.where(small, 0.0, A)
    r = np.nansum(A, axis=0)
    for k in np.flatnonzero(~(r > 0)):
        raise RecoveryError(f"topic {k} has non-positive mass {r[k]:.3g}", component=int(k))
    if np.any(lam <= 0):
        raise RecoveryError("non-positive eigenvalue", component=int(np.argmin(lam)))
    s = (r / lam) ** 2
    t = r * s
    b = float(np.mean(2.0 * s / t))
    c = s * b**2
    A = A / r
    return GPParams.recovered(A, c, b, np.asarray(getattr(w, "w", w), dtype=float))

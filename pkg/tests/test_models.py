import numpy as np
import pytest
from scipy import stats

from wtpm.errors import InvalidInput, NotIdentifiable, RecoveryError
from wtpm.evaluation import epsilon_c, match_columns
from wtpm.missingness import MaskedDataset
from wtpm.models import (
    GMParams,
    GPParams,
    estimate_sigma2_complete,
    gm_population_moments,
    gp_population_moments,
    random_gm_params,
    random_gp_params,
    recover_gm,
    recover_gp,
    sample_gm,
    sample_gp,
)
from wtpm.moments import masked_cov
from wtpm.spectral import SpectralResult, WhiteningMap, decompose
from wtpm.weighting import WeightVector, compute_weights, weight_moments


def fake_result(A_hat, lams):
    K = len(lams)
    return SpectralResult(np.asarray(lams, float), np.eye(K), np.asarray(A_hat, float),
                          WhiteningMap(np.eye(K), np.ones(K)), np.arange(len(A_hat)))


class TestParams:
    def test_gm_validation(self):
        with pytest.raises(InvalidInput):
            GMParams(np.zeros((2, 2)), [0.3, 0.3], 1.0)
        with pytest.raises(InvalidInput):
            GMParams(np.zeros((2, 2)), [0.5, 0.5], 0.0)
        with pytest.raises(InvalidInput):
            GMParams(np.zeros((2, 3)), [0.5, 0.5], 1.0)

    def test_gp_validation(self):
        with pytest.raises(InvalidInput):
            GPParams([[0.5], [0.4]], [1.0], 1.0)
        with pytest.raises(InvalidInput):
            GPParams([[1.5], [-0.5]], [1.0], 1.0)
        with pytest.raises(InvalidInput):
            GPParams([[1.0]], [0.0], 1.0)

    def test_gp_derived(self):
        p = GPParams([[0.25, 1.0], [0.75, 0.0]], [2.0, 3.0], 0.5)
        np.testing.assert_allclose(p.s, [8.0, 12.0], rtol=1e-12)
        np.testing.assert_allclose(p.t, [32.0, 48.0], rtol=1e-12)
        assert p.L == pytest.approx(10.0, rel=1e-12)

    def test_random_params_deterministic(self):
        a, b = random_gm_params(5, 2, 3), random_gm_params(5, 2, 3)
        assert np.array_equal(a.A, b.A) and np.array_equal(a.pi, b.pi)
        g = random_gp_params(8, 3, 1)
        np.testing.assert_allclose(g.A.sum(axis=0), 1.0, atol=1e-12)


class TestSampleGM:
    def test_degenerate_variance(self):
        params = GMParams([[3.0], [-1.0]], [1.0], 1e-300)
        ds = sample_gm(params, 50, 0)
        np.testing.assert_allclose(ds.values, np.tile([[3.0], [-1.0]], 50), atol=1e-140)

    def test_component_frequencies(self):
        pi = np.array([0.2, 0.5, 0.3])
        params = GMParams(np.zeros((2, 3)), pi, 1.0)
        n = 10**5
        _, h = sample_gm(params, n, 1, return_labels=True)
        counts = np.bincount(h, minlength=3)
        chi2 = np.sum((counts - n * pi) ** 2 / (n * pi))
        assert chi2 < stats.chi2.ppf(0.999, df=2)

    def test_covariance(self):
        params = random_gm_params(4, 3, 2, sigma2=4.0)
        ds = sample_gm(params, 200000, 2)
        A, pi = params.A, params.pi
        mu = A @ pi
        ref = (A * pi) @ A.T + 4.0 * np.eye(4) - np.outer(mu, mu)
        cov, _ = masked_cov(ds)
        np.testing.assert_allclose(cov.entries, ref, atol=0.03 * np.abs(ref).max())

    def test_deterministic(self):
        params = random_gm_params(3, 2, 0)
        assert np.array_equal(sample_gm(params, 5000, 5).values, sample_gm(params, 5000, 5).values)

    def test_prefix(self):
        params = random_gm_params(3, 2, 0)
        big = sample_gm(params, 9000, 5).values
        np.testing.assert_array_equal(sample_gm(params, 4100, 5).values, big[:, :4100])


class TestSampleGP:
    def test_document_length(self):
        params = random_gp_params(6, 3, 0, c=[1.0, 2.0, 0.5], b=0.05)
        ds = sample_gp(params, 10**5, 0)
        assert ds.values.sum(axis=0).mean() == pytest.approx(params.L, rel=0.01)

    def test_integer_non_negative(self):
        ds = sample_gp(random_gp_params(5, 2, 1, b=0.1), 2000, 1)
        v = ds.values
        assert np.all(v >= 0) and np.array_equal(v, np.round(v))

    def test_deterministic(self):
        params = random_gp_params(3, 2, 0)
        assert np.array_equal(sample_gp(params, 1000, 2).values, sample_gp(params, 1000, 2).values)


class TestSigma2:
    def test_population_exact(self):
        params = random_gm_params(6, 2, 0, sigma2=7.0)
        # whitened noise recoloured so the sample covariance is the population one
        A, pi = params.A, params.pi
        mu = A @ pi
        cov = (A * pi) @ A.T - np.outer(mu, mu) + 7.0 * np.eye(6)
        L = np.linalg.cholesky(cov)
        z = np.random.default_rng(1).standard_normal((6, 5000))
        z -= z.mean(axis=1, keepdims=True)
        z = np.linalg.solve(np.linalg.cholesky(np.cov(z, bias=True)), z)
        ds = MaskedDataset.fully_observed(L @ z)
        assert estimate_sigma2_complete(ds, 2) == pytest.approx(7.0, rel=1e-9)

    def test_sampled_sigma_100(self):
        params = random_gm_params(10, 3, 4)
        ds = sample_gm(params, 10**5, 4)
        assert estimate_sigma2_complete(ds, 3) == pytest.approx(100.0, rel=0.05)

    def test_smallest_eigenvalue(self):
        x = np.random.default_rng(3).standard_normal((3, 500))
        ds = MaskedDataset.fully_observed(x)
        cov, _ = masked_cov(ds, min_count=1)
        assert estimate_sigma2_complete(ds, 2) == pytest.approx(np.linalg.eigvalsh(cov.entries)[0], rel=1e-12)

    def test_uses_complete_dims_only(self):
        x = np.random.default_rng(3).standard_normal((4, 500))
        mask = np.ones((4, 500), bool)
        mask[3, ::2] = False
        a = estimate_sigma2_complete(MaskedDataset(x, mask), 1)
        b = estimate_sigma2_complete(MaskedDataset.fully_observed(x[:3]), 1)
        assert a == b

    def test_not_identifiable(self):
        with pytest.raises(NotIdentifiable):
            estimate_sigma2_complete(MaskedDataset.fully_observed(np.ones((2, 10))), 2)


class TestRecoverGM:
    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip(self, seed):
        params = random_gm_params(8, 3, seed)
        sr = decompose(gm_population_moments(params), 3)
        est = recover_gm(sr, WeightVector(np.ones(8), "full"), params.sigma2)
        m = match_columns(est.A, params.A)
        np.testing.assert_allclose(est.A[:, m.permutation], params.A, atol=1e-6)
        np.testing.assert_allclose(est.pi[m.permutation], params.pi, atol=1e-6)
        assert est.sigma2 == params.sigma2

    def test_k1(self):
        est = recover_gm(fake_result([[1.0], [2.0]], [7.3]), np.ones(2), 1.0)
        np.testing.assert_array_equal(est.pi, [1.0])

    def test_equal_mixture(self):
        params = GMParams([[10.0, -10.0], [5.0, 5.0], [0.0, 3.0]], [0.5, 0.5], 2.0)
        sr = decompose(gm_population_moments(params), 2)
        np.testing.assert_allclose(sr.eigenvalues, [np.sqrt(2)] * 2, atol=1e-10)
        est = recover_gm(sr, np.ones(3), 2.0)
        np.testing.assert_allclose(est.pi, [0.5, 0.5], atol=1e-12)

    def test_weighted_round_trip(self):
        params = random_gm_params(8, 3, 1)
        w = compute_weights([1, 1, 1, 1, 0.8, 0.6, 0.4, 0.2])
        sr = decompose(weight_moments(gm_population_moments(params), w), 3)
        est = recover_gm(sr, w, params.sigma2)
        assert epsilon_c(est.A, params.A) < 1e-6

    def test_non_positive(self):
        with pytest.raises(RecoveryError):
            recover_gm(fake_result(np.eye(2), [1.0, -1.0]), np.ones(2), 1.0)


class TestRecoverGP:
    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip(self, seed):
        params = random_gp_params(10, 4, seed, c=[1.0, 0.5, 2.0, 1.5], b=0.1)
        sr = decompose(gp_population_moments(params), 4)
        est = recover_gp(sr, WeightVector(np.ones(10), "full"))
        m = match_columns(est.A, params.A)
        assert m.total < 1e-6
        np.testing.assert_allclose(est.A.sum(axis=0), 1.0, atol=1e-12)
        np.testing.assert_allclose(est.c[m.permutation], params.c, rtol=1e-6)
        assert est.b == pytest.approx(0.1, rel=1e-6)

    def test_inversion(self):
        # s = 2, t = 4: column (t/s) a = 2a, eigenvalue t / s^1.5
        a = np.array([[0.25], [0.75]])
        est = recover_gp(fake_result(2 * a, [4 / 2**1.5]), np.ones(2))
        assert est.b == pytest.approx(1.0, rel=1e-12)
        assert est.c[0] == pytest.approx(2.0, rel=1e-12)
        np.testing.assert_allclose(est.A, a, rtol=1e-12)

    def test_clamps_round_off_only(self):
        A = np.array([[1.0, 1.0], [-1e-12, -0.2], [0.5, 0.5]])
        est = recover_gp(fake_result(A, [1.0, 1.0]), np.ones(3))
        assert est.A[1, 0] == 0.0
        assert est.A[1, 1] < 0 and est.negative_entries == 1

    def test_non_positive_mass(self):
        with pytest.raises(RecoveryError) as ei:
            recover_gp(fake_result([[-1.0, 1.0], [-1.0, 1.0]], [1.0, 1.0]), np.ones(2))
        assert ei.value.component == 0

    def test_partial_rows_nan(self):
        params = random_gp_params(6, 2, 0, b=0.1)
        w = compute_weights([1, 1, 1, 1, 0.5, 0.5], "partial")
        sr = decompose(weight_moments(gp_population_moments(params), w), 2)
        est = recover_gp(sr, w)
        assert np.isnan(est.A[4:]).all()
        np.testing.assert_allclose(est.A[:4].sum(axis=0), 1.0, atol=1e-12)
        assert epsilon_c(est.A, params.A, np.arange(4)) < 1e-6

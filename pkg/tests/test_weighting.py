import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wtpm.errors import InvalidInput, ShapeError
from wtpm.missingness import mcar_mask
from wtpm.models import gm_population_moments, gm_raw_moments, gp_population_moments, random_gm_params, random_gp_params, sample_gm, sample_gp
from wtpm.moments import MomentPair, assemble_gm, gm_moments, gp_moments
from wtpm.weighting import WeightVector, compute_weights, unweight_topics, weight_moments

probs = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8)


class TestComputeWeights:
    def test_proportional(self):
        np.testing.assert_array_equal(compute_weights([1, 1, 0.5], "proportional").w, [1, 1, 0.5])

    def test_sqrt(self):
        np.testing.assert_array_equal(compute_weights([1, 1, 0.25], "sqrt").w, [1, 1, 0.5])

    def test_partial(self):
        np.testing.assert_array_equal(compute_weights([1, 0.9], "partial").w, [1, 0])

    def test_partial_declared_dims(self):
        w = compute_weights([1, 1, 0.5], "partial", complete_dims=[0])
        np.testing.assert_array_equal(w.w, [1, 0, 0])

    def test_full(self):
        np.testing.assert_array_equal(compute_weights([0.2, 1], "full").w, [1, 1])

    def test_default_is_proportional(self):
        assert compute_weights([0.5]).strategy == "proportional"

    def test_unknown(self):
        with pytest.raises(InvalidInput):
            compute_weights([1.0], "cubic")

    def test_partial_needs_complete(self):
        with pytest.raises(InvalidInput):
            compute_weights([0.5, 0.5], "partial")

    @settings(max_examples=60, deadline=None)
    @given(probs, st.sampled_from(["full", "proportional", "sqrt"]))
    def test_bounds_and_complete_dims(self, p, strategy):
        w = compute_weights(p, strategy).w
        assert np.all((w >= 0) & (w <= 1))
        assert np.all(w[np.asarray(p) == 1.0] == 1.0)


class TestWeightMoments:
    def _moments(self, seed=0):
        return gp_population_moments(random_gp_params(5, 2, seed, b=0.5))

    def test_identity_bit_exact(self):
        m = self._moments()
        out = weight_moments(m, WeightVector(np.ones(5), "full"))
        assert np.array_equal(out.S.entries, m.S.entries)
        assert np.array_equal(out.T.entries, m.T.entries)

    def test_hypothetical_arithmetic(self):
        # weights above 1 are not valid WeightVectors; use a raw array here
        S = np.array([[1.0, 2.0], [2.0, 3.0]])
        m = MomentPair(S, np.zeros((2, 2, 2)), np.zeros(2))
        out = weight_moments(m, np.array([2.0, 1.0]))
        assert out.S.entries[0, 0] == 4.0 and out.S.entries[0, 1] == 4.0

    def test_entrywise(self):
        m = self._moments(1)
        w = np.array([1.0, 0.9, 0.5, 0.3, 0.7])
        out = weight_moments(m, WeightVector(w, "proportional"))
        for i, j, k in itertools.product(range(5), repeat=3):
            assert out.T.entries[i, j, k] == pytest.approx(w[i] * w[j] * w[k] * m.T.entries[i, j, k], rel=1e-14)
        np.testing.assert_allclose(out.S.entries, m.S.entries * np.outer(w, w), rtol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.lists(st.floats(0.05, 1.0), min_size=6, max_size=6))
    def test_rank_one_structure(self, seed, w):
        params = random_gp_params(6, 3, seed, b=0.5)
        w = np.asarray(w)
        out = weight_moments(gp_population_moments(params), WeightVector(w, "proportional"))
        A_star = w[:, None] * params.A
        S_ref = (A_star * params.s) @ A_star.T
        T_ref = np.einsum("ik,jk,lk,k->ijl", A_star, A_star, A_star, params.t)
        np.testing.assert_allclose(out.S.entries, S_ref, atol=1e-12 * np.abs(S_ref).max())
        np.testing.assert_allclose(out.T.entries, T_ref, atol=1e-12 * np.abs(T_ref).max())

    def test_partial_is_submatrix(self):
        params = random_gm_params(6, 2, 0)
        N = 3000
        p = np.array([1, 1, 1, 1, 0.5, 0.3])
        ds = sample_gm(params, N, 0).with_mask(mcar_mask(p, N, 0))
        m = gm_moments(ds, params.sigma2)
        w = compute_weights(p, "partial")
        out = weight_moments(m, w)
        sub = gm_moments(ds.select_dims(np.arange(4)), params.sigma2)
        assert np.array_equal(out.S.entries, sub.S.entries)
        assert np.array_equal(out.T.entries, sub.T.entries)
        np.testing.assert_array_equal(out.dims, np.arange(4))
        np.testing.assert_array_equal(out.pair_counts, m.pair_counts[:4, :4])

    def test_counts_carried(self):
        params = random_gp_params(4, 2, 0)
        ds = sample_gp(params, 500, 0).with_mask(mcar_mask([1, 1, 0.5, 0.5], 500, 0))
        m = gp_moments(ds)
        out = weight_moments(m, compute_weights([1, 1, 0.5, 0.5]))
        assert out.pair_counts is m.pair_counts
        assert out.triple_counts is m.triple_counts

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            weight_moments(self._moments(), WeightVector(np.ones(3), "full"))

    @pytest.mark.parametrize("seed", range(3))
    def test_elliptical_identity(self, seed):
        params = random_gm_params(5, 3, seed)
        w = np.array([1.0, 1.0, 0.8, 0.4, 0.2])
        base = gm_population_moments(params)
        ref = weight_moments(base, WeightVector(w, "proportional"))
        A_star = w[:, None] * params.A
        var_star = w**2 * params.sigma2
        m1, m2, m3 = gm_raw_moments(A_star, params.pi, var_star)
        S, T = assemble_gm(m1, m2, m3, var_star)
        np.testing.assert_allclose(S.entries, ref.S.entries, rtol=0, atol=1e-12 * np.abs(ref.S.entries).max())
        np.testing.assert_allclose(T.entries, ref.T.entries, rtol=0, atol=1e-12 * np.abs(ref.T.entries).max())


class TestUnweight:
    def test_identity(self):
        a = np.random.default_rng(0).random((3, 2))
        np.testing.assert_array_equal(unweight_topics(a, WeightVector(np.ones(3), "full")), a)

    def test_single(self):
        assert unweight_topics([[0.2]], WeightVector([0.5], "proportional"))[0, 0] == pytest.approx(0.4)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31), st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4))
    def test_round_trip(self, seed, w):
        a = np.random.default_rng(seed).standard_normal((4, 3))
        w = np.asarray(w)
        back = unweight_topics(w[:, None] * a, WeightVector(w, "proportional"))
        np.testing.assert_allclose(back, a, rtol=1e-14, atol=1e-14)

    def test_zero_weight_rows_absent(self):
        w = WeightVector([1.0, 0.0, 1.0], "partial")
        out = unweight_topics(np.ones((2, 2)), w)
        assert np.isnan(out[1]).all() and np.isfinite(out[[0, 2]]).all()
        out = unweight_topics(np.ones((3, 2)), w)
        assert np.isnan(out[1]).all()

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            unweight_topics(np.ones((5, 2)), WeightVector([1.0, 0.0, 1.0], "partial"))

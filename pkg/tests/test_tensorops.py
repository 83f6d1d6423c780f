import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwct.errors import EmptyRegion, InvalidAlpha, InvalidMatrix, ShapeMismatch
from gwct.tensorops import (
    FeatureMap,
    FeatureStats,
    blend_features,
    color,
    compute_stats,
    coloring_operator,
    sym_eig,
    whiten,
    whitening_operator,
)

from reference_wct import wct_reference


def fmap(data, h=None, w=None):
    data = np.asarray(data, dtype=np.float64)
    if h is None:
        h, w = 1, data.shape[1]
    return FeatureMap(data, h, w)


class TestComputeStats:
    def test_hand_oracle(self):
        # Two pixels (1, 0) and (-1, 0): zero mean, cov [[2, 0], [0, 0]]
        # under the (count - 1) normalizer.
        stats = compute_stats(fmap([[1.0, -1.0], [0.0, 0.0]]))
        assert stats.count == 2
        np.testing.assert_array_equal(stats.mean, [0.0, 0.0])
        np.testing.assert_array_equal(stats.cov, [[2.0, 0.0], [0.0, 0.0]])

    def test_matches_np_cov(self):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(5, 40))
        stats = compute_stats(fmap(data))
        np.testing.assert_allclose(stats.cov, np.cov(data), atol=1e-12)

    def test_masked_region(self):
        data = np.array([[1.0, 100.0, -1.0, 100.0]])
        mask = np.array([True, False, True, False])
        stats = compute_stats(fmap(data), mask)
        assert stats.count == 2
        assert stats.mean[0] == 0.0
        assert stats.cov[0, 0] == 2.0

    def test_empty_mask_rejected(self):
        with pytest.raises(EmptyRegion):
            compute_stats(fmap([[1.0, 2.0]]), np.array([False, False]))

    def test_wrong_mask_length_rejected(self):
        with pytest.raises(ShapeMismatch):
            compute_stats(fmap([[1.0, 2.0]]), np.array([True]))

    def test_single_column_zero_cov(self):
        stats = compute_stats(fmap([[3.0], [4.0]]))
        assert stats.count == 1
        np.testing.assert_array_equal(stats.cov, np.zeros((2, 2)))


class TestSymEig:
    def test_descending_order(self):
        pair = sym_eig(np.diag([1.0, 5.0, 3.0]))
        np.testing.assert_allclose(pair.values, [5.0, 3.0, 1.0])

    def test_symmetrizes_input(self):
        # (M + M^T)/2 of [[0, 2], [0, 0]] is [[0, 1], [1, 0]]: eigenvalues 1, -1.
        pair = sym_eig(np.array([[0.0, 2.0], [0.0, 0.0]]))
        np.testing.assert_allclose(pair.values, [1.0, -1.0], atol=1e-12)

    def test_reconstructs(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(6, 6))
        m = (a + a.T) / 2.0
        pair = sym_eig(m)
        np.testing.assert_allclose(
            (pair.vectors * pair.values) @ pair.vectors.T, m, atol=1e-12
        )

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidMatrix):
            sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(ShapeMismatch):
            sym_eig(np.zeros((2, 3)))


class TestWhitening:
    def test_hand_oracle_with_clamp(self):
        # cov diag(2, 0), eps 1e-5: floor = 2e-5 clamps the zero eigenvalue.
        stats = FeatureStats(mean=np.zeros(2), cov=np.diag([2.0, 0.0]), count=2)
        op, clamped = whitening_operator(stats, eps=1e-5)
        assert clamped == 1
        np.testing.assert_allclose(
            op, np.diag([2.0 ** -0.5, (2.0e-5) ** -0.5]), atol=1e-9
        )

    def test_identity_covariance_after_whitening(self):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(8, 200)) * rng.uniform(0.5, 3.0, size=(8, 1))
        white = whiten(fmap(data, 10, 20), compute_stats(fmap(data, 10, 20)))
        wstats = compute_stats(white)
        np.testing.assert_allclose(wstats.cov, np.eye(8), atol=1e-10)
        np.testing.assert_allclose(wstats.mean, np.zeros(8), atol=1e-12)

    def test_all_zero_spectrum_uses_absolute_floor(self):
        stats = FeatureStats(mean=np.zeros(2), cov=np.zeros((2, 2)), count=3)
        op, clamped = whitening_operator(stats, eps=1e-5)
        assert clamped == 2
        np.testing.assert_allclose(op, np.eye(2) * (1e-5) ** -0.5)

    def test_bad_eps_rejected(self):
        stats = FeatureStats(mean=np.zeros(1), cov=np.eye(1), count=2)
        with pytest.raises(InvalidMatrix):
            whitening_operator(stats, eps=0.0)


class TestColoring:
    def test_negative_eigenvalues_clamped_to_zero(self):
        stats = FeatureStats(mean=np.array([7.0]), cov=np.array([[-1.0]]), count=0)
        op, mean, clamped = coloring_operator(stats)
        assert clamped == 1
        assert op[0, 0] == 0.0
        assert mean[0] == 7.0

    def test_round_trip_recovers_features(self):
        rng = np.random.default_rng(2)
        data = rng.normal(size=(6, 120)) + rng.uniform(-3, 3, size=(6, 1))
        f = fmap(data, 10, 12)
        stats = compute_stats(f)
        back = color(whiten(f, stats), stats)
        rel = np.linalg.norm(back.data - data) / np.linalg.norm(data)
        assert rel < 1e-8

    def test_matches_reference_oracle(self):
        rng = np.random.default_rng(5)
        content = rng.normal(size=(4, 90)) * np.array([[1.0], [2.0], [0.5], [3.0]])
        style = rng.normal(size=(4, 70)) + 1.5
        got = color(
            whiten(fmap(content, 9, 10), compute_stats(fmap(content, 9, 10))),
            compute_stats(fmap(style, 7, 10)),
        )
        want = wct_reference(content, style)
        assert np.linalg.norm(got.data - want) / np.linalg.norm(want) < 1e-9


class TestBlend:
    def test_endpoints_bitwise(self):
        c = fmap([[0.1, 0.2], [0.3, 0.4]])
        s = fmap([[0.9, 0.8], [0.7, 0.6]])
        np.testing.assert_array_equal(blend_features(c, s, 0.0).data, c.data)
        np.testing.assert_array_equal(blend_features(c, s, 1.0).data, s.data)

    def test_hand_oracle_midpoint(self):
        c = fmap([[0.0, 2.0]])
        s = fmap([[4.0, 6.0]])
        np.testing.assert_array_equal(blend_features(c, s, 0.5).data, [[2.0, 4.0]])

    def test_vector_alpha_per_column(self):
        c = fmap([[0.0, 2.0]])
        s = fmap([[4.0, 6.0]])
        out = blend_features(c, s, np.array([0.0, 1.0]))
        np.testing.assert_array_equal(out.data, [[0.0, 6.0]])

    def test_out_of_range_rejected(self):
        c = fmap([[0.0]])
        with pytest.raises(InvalidAlpha):
            blend_features(c, c, 1.5)
        with pytest.raises(InvalidAlpha):
            blend_features(c, c, np.array([-0.1]))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_blend_stays_between_endpoints(self, alpha):
        rng = np.random.default_rng(17)
        c = rng.normal(size=(3, 12))
        s = rng.normal(size=(3, 12))
        out = blend_features(fmap(c, 3, 4), fmap(s, 3, 4), alpha).data
        lo = np.minimum(c, s) - 1e-12
        hi = np.maximum(c, s) + 1e-12
        assert np.all(out >= lo) and np.all(out <= hi)


class TestFeatureMapValidation:
    def test_column_count_checked(self):
        with pytest.raises(ShapeMismatch):
            FeatureMap(np.zeros((2, 5)), 2, 2)

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidMatrix):
            FeatureMap(np.array([[np.inf]]), 1, 1)

    def test_asymmetric_cov_rejected(self):
        with pytest.raises(InvalidMatrix):
            FeatureStats(mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.0, 1.0]]), count=2)

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hdglht import build_hypothesis, linear_combination_contrast, manova_contrast
from hdglht.contrasts import ContrastMatrix
from hdglht.errors import (
    DimensionMismatch,
    InvalidContrast,
    InvalidK,
    RankDeficient,
    ZeroContrast,
)


class TestContrastMatrix:
    def test_rank_deficient_rows_rejected(self):
        with pytest.raises(RankDeficient):
            ContrastMatrix([[1.0, -1.0, 0.0], [2.0, -2.0, 0.0]])

    def test_q_equal_k_rejected(self):
        with pytest.raises(InvalidContrast):
            ContrastMatrix(np.eye(3))

    def test_single_group_rejected(self):
        with pytest.raises(InvalidK):
            ContrastMatrix([[1.0]])


class TestConstructors:
    def test_manova_k2(self):
        assert_allclose(manova_contrast(2).entries, [[-1.0, 1.0]])

    def test_manova_k4_shape(self):
        g = manova_contrast(4)
        assert g.entries.shape == (3, 4)
        assert_allclose(g.entries[:, 0], -1.0)
        assert_allclose(g.entries[:, 1:], np.eye(3))

    def test_manova_k1_invalid(self):
        with pytest.raises(InvalidK):
            manova_contrast(1)

    def test_combination(self):
        g = linear_combination_contrast([1, 2, 1, -4])
        assert g.q == 1 and g.k == 4
        g2 = linear_combination_contrast([-1, 2, -3])
        assert_allclose(g2.entries, [[-1.0, 2.0, -3.0]])

    def test_zero_combination(self):
        with pytest.raises(ZeroContrast):
            linear_combination_contrast([0.0, 0.0])


class TestBuildHypothesis:
    def test_two_group_example(self):
        ctx = build_hypothesis([[1.0, -1.0]], [4, 4])
        assert_allclose(ctx.h, 2.0 * np.array([[1, -1], [-1, 1]]), atol=1e-12)
        assert_allclose(ctx.a, np.array([[0.5, -0.5], [-0.5, 0.5]]), atol=1e-12)
        assert_allclose(np.trace(ctx.a), 1.0, atol=1e-10)

    def test_manova_k4_idempotent_trace(self):
        ctx = build_hypothesis(manova_contrast(4), [25, 30, 40, 45])
        assert np.abs(ctx.a @ ctx.a - ctx.a).max() <= 1e-10
        assert abs(np.trace(ctx.a) - 3.0) <= 1e-10

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            build_hypothesis([[1.0, -1.0, 0.0], [2.0, -2.0, 0.0]], [5, 5, 5])

    def test_size_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_hypothesis(manova_contrast(3), [5, 5])

    def test_rows_orthonormal_in_d_metric(self):
        ctx = build_hypothesis(manova_contrast(5), [7, 9, 11, 13, 15])
        b = ctx.g * np.sqrt(1.0 / np.asarray(ctx.n))
        assert np.abs(b @ b.T - np.eye(ctx.q)).max() <= 1e-10

    def test_entry_identity(self):
        ctx = build_hypothesis(manova_contrast(4), [25, 30, 40, 45])
        rd = 1.0 / np.sqrt(np.asarray(ctx.n, dtype=float))
        assert np.abs(ctx.a - ctx.h * np.outer(rd, rd)).max() <= 1e-12


class TestRandomContrastProperties:
    def test_idempotency_and_trace_random(self, rng):
        for _ in range(100):
            k = int(rng.integers(2, 7))
            q = int(rng.integers(1, k))
            g = rng.normal(size=(q, k))
            n = rng.integers(3, 60, size=k)
            ctx = build_hypothesis(g, n)
            assert np.abs(ctx.a @ ctx.a - ctx.a).max() <= 1e-10
            assert abs(np.trace(ctx.a) - q) <= 1e-10

    def test_left_multiplication_invariance(self, rng):
        g = rng.normal(size=(3, 5))
        n = [11, 13, 17, 19, 23]
        base = build_hypothesis(g, n)
        for _ in range(50):
            p_mat = rng.normal(size=(3, 3))
            while abs(np.linalg.det(p_mat)) < 1e-3:
                p_mat = rng.normal(size=(3, 3))
            other = build_hypothesis(p_mat @ g, n)
            assert_allclose(other.h, base.h, rtol=1e-8, atol=1e-8)
            assert_allclose(other.a, base.a, rtol=1e-8, atol=1e-8)

    def test_both_manova_forms_give_same_h(self):
        # (-1, I) and (I, -1) generate the same hypothesis
        k = 4
        n = [25, 30, 40, 45]
        left = build_hypothesis(manova_contrast(k), n)
        flipped = np.hstack([np.eye(k - 1), -np.ones((k - 1, 1))])
        right = build_hypothesis(flipped, n)
        assert_allclose(left.h, right.h, rtol=1e-10, atol=1e-10)
        assert_allclose(left.a, right.a, rtol=1e-10, atol=1e-10)

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hdglht import WeightSpec, apply_weight, default_weights, weight_quadratic
from hdglht.errors import DimensionMismatch, InvalidP
from hdglht.oracle import dense_weight

from conftest import random_weights


class TestDefaultWeights:
    def test_p256_mean(self):
        w = default_weights(256)
        assert_allclose(w.a, 0.25, rtol=0, atol=1e-15)

    def test_p1_variance(self):
        assert_allclose(default_weights(1).b2, [8.0], rtol=1e-15)

    def test_p100_mean(self):
        # 2 * 10^(-3/4), evaluated independently to full precision
        assert_allclose(default_weights(100).a[0], 0.35565588200778456, rtol=1e-14)

    def test_variance_grid(self):
        w = default_weights(5)
        i = np.arange(1, 6)
        assert_allclose(w.b2, 2.0 * (5 + i) ** 2 / 25.0, rtol=1e-15)

    def test_invalid_p(self):
        with pytest.raises(InvalidP):
            default_weights(0)

    def test_nonpositive_variance_rejected(self):
        with pytest.raises(InvalidP):
            WeightSpec(a=np.zeros(3), b2=np.array([1.0, 0.0, 1.0]))


class TestApplyWeight:
    def test_identity_weight(self):
        w = WeightSpec(a=np.zeros(4), b2=np.ones(4))
        v = np.array([1.0, -2.0, 3.0, 0.5])
        assert_allclose(apply_weight(w, v), v, rtol=0, atol=0)

    def test_zero_vector(self, rng):
        w = random_weights(rng, 6)
        assert_allclose(apply_weight(w, np.zeros(6)), 0.0, atol=0)

    def test_matches_dense(self, rng):
        w = random_weights(rng, 3)
        v = rng.normal(size=3)
        assert_allclose(apply_weight(w, v), dense_weight(w) @ v, rtol=1e-12)

    def test_length_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            apply_weight(random_weights(rng, 3), np.ones(4))


class TestWeightQuadratic:
    def test_basis_vector(self, rng):
        w = random_weights(rng, 5)
        e1 = np.eye(5)[0]
        assert_allclose(weight_quadratic(w, e1, e1), w.b2[0] + w.a[0] ** 2, rtol=1e-14)

    def test_orthogonal_to_mean_direction(self):
        w = WeightSpec(a=np.array([1.0, 1.0]), b2=np.array([1.0, 1.0]))
        u = np.array([1.0, -1.0])
        assert_allclose(weight_quadratic(w, u, u), 2.0, rtol=1e-15)

    def test_matches_dense(self, rng):
        w = random_weights(rng, 5)
        u, v = rng.normal(size=5), rng.normal(size=5)
        assert_allclose(
            weight_quadratic(w, u, v), u @ dense_weight(w) @ v, rtol=1e-12
        )

    def test_positive_definite(self, rng):
        w = random_weights(rng, 8)
        for _ in range(25):
            x = rng.normal(size=8)
            assert weight_quadratic(w, x, x) > 0.0

    def test_bilinear(self, rng):
        w = random_weights(rng, 7)
        u, v, z = rng.normal(size=(3, 7))
        c = 2.75
        lhs = weight_quadratic(w, u, c * v + z)
        rhs = c * weight_quadratic(w, u, v) + weight_quadratic(w, u, z)
        assert_allclose(lhs, rhs, rtol=1e-10)

    def test_consistent_with_apply(self, rng):
        w = random_weights(rng, 9)
        u, v = rng.normal(size=(2, 9))
        assert_allclose(
            weight_quadratic(w, u, v), u @ apply_weight(w, v), rtol=1e-12
        )

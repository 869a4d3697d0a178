"""Shared fixtures and small reference helpers for the test suite."""

import numpy as np
import pytest

from hdglht import WeightSpec, build_hypothesis, group_sample, manova_contrast
from hdglht.oracle import dense_weight


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_weights(rng, p):
    return WeightSpec(a=rng.normal(size=p), b2=rng.uniform(0.5, 3.0, size=p))


def random_groups(rng, sizes, p, scale=1.0):
    return [group_sample(scale * rng.normal(size=(n, p))) for n in sizes]


def dense_cov(sample):
    """Unbiased sample covariance, densely."""
    x = sample.data - sample.mean
    return x.T @ x / (sample.n - 1)


def ks_two_sample(a, b):
    a = np.sort(np.asarray(a))
    b = np.sort(np.asarray(b))
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def ks_uniform(u):
    u = np.sort(np.asarray(u))
    n = u.size
    grid = (np.arange(1, n + 1)) / n
    return float(max(np.abs(grid - u).max(), np.abs(u - (np.arange(n) / n)).max()))


__all__ = [
    "random_weights",
    "random_groups",
    "dense_cov",
    "dense_weight",
    "ks_two_sample",
    "ks_uniform",
    "build_hypothesis",
    "manova_contrast",
]

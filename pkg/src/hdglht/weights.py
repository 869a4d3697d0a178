"""Diagonal-plus-rank-one weight matrices, applied without densification.

The weight matrix is W = B + a a^T with B = diag(b2). Only the two length-p
vectors are stored; products cost O(p). The dense form exists solely inside
the oracle module for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidP

__all__ = ["WeightSpec", "default_weights", "apply_weight", "weight_quadratic"]


@dataclass(frozen=True)
class WeightSpec:
    """Weight means ``a`` and strictly positive weight variances ``b2``."""

    a: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b2 = np.asarray(self.b2, dtype=float).reshape(-1)
        if a.shape != b2.shape:
            raise DimensionMismatch(
                f"weight vectors differ in length: {a.size} vs {b2.size}"
            )
        if a.size < 1:
            raise InvalidP("weights need p >= 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b2))):
            raise DimensionMismatch("weight entries must be finite")
        if np.any(b2 <= 0):
            raise InvalidP("all weight variances must be strictly positive")
        a.setflags(write=False)
        b2.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b2", b2)

    @property
    def p(self) -> int:
        return self.a.size


def default_weights(p: int) -> WeightSpec:
    """The reference weight choice: a_i = 2 p^(-3/8), b2_i = 2 (p+i)^2 / p^2."""
    if p < 1:
        raise InvalidP(f"p must be >= 1, got {p}")
    a = np.full(p, 2.0 * float(p) ** (-3.0 / 8.0))
    i = np.arange(1, p + 1, dtype=float)
    b2 = 2.0 * (p + i) ** 2 / float(p) ** 2
    return WeightSpec(a=a, b2=b2)


def apply_weight(w: WeightSpec, v: np.ndarray) -> np.ndarray:
    """W v = b2 * v + a (a . v), in O(p)."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != w.p:
        raise DimensionMismatch(f"vector has length {v.size}, weights have p={w.p}")
    return w.b2 * v + w.a * float(w.a @ v)


def weight_quadratic(w: WeightSpec, u: np.ndarray, v: np.ndarray) -> float:
    """u^T W v = sum_i b2_i u_i v_i + (a.u)(a.v); symmetric and bilinear."""
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if u.size != w.p or v.size != w.p:
        raise DimensionMismatch(
            f"vector lengths {u.size}, {v.size} do not match weights p={w.p}"
        )
    return float(np.sum(w.b2 * u * v) + (w.a @ u) * (w.a @ v))


def weight_rows(w: WeightSpec, x: np.ndarray) -> np.ndarray:
    """Apply W to every row of an (n, p) matrix: X W (rows x_j^T W)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != w.p:
        raise DimensionMismatch(
            f"matrix of shape {x.shape} does not match weights p={w.p}"
        )
    return x * w.b2 + np.outer(x @ w.a, w.a)

"""Hypothesis setup: contrast matrices and the derived projection matrices.

A test of ``G_tilde @ M = 0`` on the k x p matrix of group means is driven
entirely by a handful of small matrices derived from the q x k coefficient
matrix ``G_tilde`` and the group sizes:

    D = diag(1/n_1, ..., 1/n_k)
    G = (G_tilde D G_tilde^T)^{-1/2} G_tilde        (q x k, rows orthonormal
                                                     in the D inner product)
    H = G^T G                                        (k x k)
    A = D^{1/2} H D^{1/2}                            (k x k, symmetric
                                                     idempotent, trace q)

``HypothesisContext`` carries all of them, immutably, so the test engine and
the simulation harness never redo this algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidContrast,
    InvalidK,
    RankDeficient,
    ZeroContrast,
)

__all__ = [
    "ContrastMatrix",
    "HypothesisContext",
    "manova_contrast",
    "linear_combination_contrast",
    "build_hypothesis",
]

# Relative singular-value cutoff below which contrast rows count as dependent.
_RANK_RTOL = 1e-10
# Relative eigenvalue floor for inverting G_tilde D G_tilde^T.
_EIG_RTOL = 1e-12


@dataclass(frozen=True)
class ContrastMatrix:
    """Validated q x k coefficient matrix with full row rank and q < k."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if entries.ndim != 2:
            raise InvalidContrast("contrast must be a 2-D matrix")
        q, k = entries.shape
        if q < 1:
            raise InvalidContrast("contrast needs at least one row")
        if k < 2:
            raise InvalidK(f"contrast needs at least two groups, got k={k}")
        if q >= k:
            raise InvalidContrast(
                f"contrast must have fewer rows than groups (q={q}, k={k})"
            )
        if not np.all(np.isfinite(entries)):
            raise InvalidContrast("contrast entries must be finite")
        s = np.linalg.svd(entries, compute_uv=False)
        if s[-1] <= _RANK_RTOL * s[0]:
            raise RankDeficient(
                f"contrast rows are numerically dependent (q={q}, "
                f"smallest/largest singular value = {s[-1]:.3e}/{s[0]:.3e})"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def q(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]


def manova_contrast(k: int) -> ContrastMatrix:
    """The (k-1) x k matrix (-1, I) testing equality of all k means."""
    if k < 2:
        raise InvalidK(f"mean-equality contrast needs k >= 2, got {k}")
    g = np.hstack([-np.ones((k - 1, 1)), np.eye(k - 1)])
    return ContrastMatrix(g)


def linear_combination_contrast(coeffs) -> ContrastMatrix:
    """The 1 x k contrast testing sum_i c_i mu_i = 0."""
    c = np.asarray(coeffs, dtype=float).reshape(-1)
    if not np.any(c):
        raise ZeroContrast("all combination coefficients are zero")
    return ContrastMatrix(c.reshape(1, -1))


@dataclass(frozen=True)
class HypothesisContext:
    """Contrast plus derived projection matrices for fixed group sizes.

    Immutable after construction; safe to share across threads/processes.
    """

    g_tilde: ContrastMatrix
    n: tuple[int, ...]
    g: np.ndarray = field(repr=False)  # q x k, (G~ D G~^T)^{-1/2} G~
    h: np.ndarray = field(repr=False)  # k x k, G^T G
    a: np.ndarray = field(repr=False)  # k x k, D^{1/2} H D^{1/2}

    @property
    def q(self) -> int:
        return self.g_tilde.q

    @property
    def k(self) -> int:
        return self.g_tilde.k

    @property
    def n_total(self) -> int:
        return int(sum(self.n))


def _symmetric_inv_sqrt(m: np.ndarray) -> np.ndarray:
    """Inverse square root of a symmetric positive definite matrix."""
    vals, vecs = np.linalg.eigh(m)
    if vals[0] <= _EIG_RTOL * vals[-1]:
        raise RankDeficient(
            "contrast Gram matrix is numerically singular "
            f"(eigenvalues {vals[0]:.3e} .. {vals[-1]:.3e})"
        )
    return (vecs / np.sqrt(vals)) @ vecs.T


def build_hypothesis(g_tilde, n) -> HypothesisContext:
    """Derive D, G, H and A for a contrast and per-group sample sizes.

    Parameters
    ----------
    g_tilde:
        A :class:`ContrastMatrix` or anything accepted by its constructor.
    n:
        Length-k sequence of positive group sizes.

    Raises
    ------
    DimensionMismatch
        If ``len(n)`` does not equal the contrast's group count.
    RankDeficient
        If the weighted Gram matrix of the contrast cannot be inverted.
    """
    if not isinstance(g_tilde, ContrastMatrix):
        g_tilde = ContrastMatrix(g_tilde)
    sizes = tuple(int(v) for v in np.asarray(n).reshape(-1))
    if len(sizes) != g_tilde.k:
        raise DimensionMismatch(
            f"contrast has k={g_tilde.k} columns but {len(sizes)} group sizes given"
        )
    if any(v < 1 for v in sizes):
        raise DimensionMismatch(f"group sizes must be >= 1, got {sizes}")

    d = 1.0 / np.asarray(sizes, dtype=float)
    gram = (g_tilde.entries * d) @ g_tilde.entries.T
    gram = 0.5 * (gram + gram.T)
    g = _symmetric_inv_sqrt(gram) @ g_tilde.entries
    h = g.T @ g
    h = 0.5 * (h + h.T)
    root_d = np.sqrt(d)
    a = h * np.outer(root_d, root_d)
    for m in (g, h, a):
        m.setflags(write=False)
    return HypothesisContext(g_tilde=g_tilde, n=sizes, g=g, h=h, a=a)

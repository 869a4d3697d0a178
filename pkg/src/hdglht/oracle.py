"""Dense brute-force references and the chi-square mixture null sampler.

These paths materialize Kronecker products and kp x kp symmetric matrices, so
they are guarded to desk scale (kp <= 5000). They exist to cross-check the
structured kernels and to sample the exact normal-theory null law

    T0* = sum_r lambda_r A_r,   A_r iid chi-square(1),

where the lambda_r are the eigenvalues of S^{1/2} (A x W) S^{1/2} with
S = blockdiag(Sigma_1, ..., Sigma_k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrasts import HypothesisContext
from .errors import DegenerateTest, DimensionMismatch, NotPSD, SizeGuardExceeded
from .kernels import OmegaTraces, check_samples
from .weights import WeightSpec

__all__ = [
    "MixtureSpec",
    "dense_weight",
    "naive_tn",
    "omega_spectrum",
    "mixture_sample",
    "dense_omega_traces",
    "d_star",
    "population_pair_traces",
    "population_omega_traces",
]

_SIZE_GUARD_KP = 5000


@dataclass(frozen=True)
class MixtureSpec:
    """Descending nonnegative mixture weights lambda_1 >= ... >= lambda_m."""

    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).reshape(-1)
        if lam.size == 0:
            raise DimensionMismatch("mixture needs at least one weight")
        if np.any(np.diff(lam) > 0):
            raise DimensionMismatch("mixture weights must be sorted descending")
        if np.any(lam < 0):
            raise DimensionMismatch("mixture weights must be nonnegative")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)


def _guard(ctx: HypothesisContext, p: int) -> None:
    if ctx.k * p > _SIZE_GUARD_KP:
        raise SizeGuardExceeded(
            f"dense reference path limited to k*p <= {_SIZE_GUARD_KP}, "
            f"got {ctx.k * p}"
        )


def dense_weight(w: WeightSpec) -> np.ndarray:
    """Materialize W = diag(b2) + a a^T (oracle use only)."""
    return np.diag(w.b2) + np.outer(w.a, w.a)


def naive_tn(ctx: HypothesisContext, w_dense: np.ndarray, samples) -> float:
    """The statistic via the explicit Kronecker form mu^T (H x W) mu."""
    samples = list(samples)
    p = check_samples(ctx, samples)
    w_dense = np.asarray(w_dense, dtype=float)
    if w_dense.shape != (p, p):
        raise DimensionMismatch(
            f"dense weight has shape {w_dense.shape}, expected ({p}, {p})"
        )
    _guard(ctx, p)
    mu_hat = np.concatenate([s.mean for s in samples])
    big = np.kron(ctx.h, w_dense)
    return float(mu_hat @ big @ mu_hat)


def _psd_sqrt(sigma: np.ndarray, label: str) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    scale = max(abs(vals[0]), abs(vals[-1]), 1e-300)
    if vals[0] < -1e-8 * scale:
        raise NotPSD(
            f"{label} has eigenvalue {vals[0]:.3e} below -1e-8 * {scale:.3e}"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _as_sigma_list(sigmas, k: int, p: int) -> list[np.ndarray]:
    mats = []
    sigmas = list(sigmas)
    if len(sigmas) != k:
        raise DimensionMismatch(f"expected {k} covariance matrices, got {len(sigmas)}")
    for i, s in enumerate(sigmas):
        if hasattr(s, "sigma_dense"):
            s = s.sigma_dense()
        s = np.asarray(s, dtype=float)
        if s.shape != (p, p):
            raise DimensionMismatch(
                f"covariance {i} has shape {s.shape}, expected ({p}, {p})"
            )
        mats.append(s)
    return mats


def omega_spectrum(ctx: HypothesisContext, w: WeightSpec, sigmas) -> MixtureSpec:
    """Eigenvalues of S^{1/2} (A x W) S^{1/2}, descending, negatives zeroed."""
    p = w.p
    _guard(ctx, p)
    mats = _as_sigma_list(sigmas, ctx.k, p)
    roots = [_psd_sqrt(s, f"covariance {i}") for i, s in enumerate(mats)]
    kp = ctx.k * p
    s_half = np.zeros((kp, kp))
    for i, r in enumerate(roots):
        s_half[i * p : (i + 1) * p, i * p : (i + 1) * p] = r
    core = np.kron(ctx.a, dense_weight(w))
    omega = s_half @ core @ s_half
    lam = np.linalg.eigvalsh(0.5 * (omega + omega.T))
    lam_max = max(float(lam[-1]), 0.0)
    floor = -1e-10 * max(lam_max, 1.0)
    if float(lam[0]) < floor:
        raise NotPSD(
            f"mixture matrix eigenvalue {lam[0]:.3e} below clamp floor {floor:.3e}"
        )
    lam = np.clip(lam, 0.0, None)[::-1]
    return MixtureSpec(lambdas=lam)


def mixture_sample(spec: MixtureSpec, count: int, seed) -> np.ndarray:
    """Draw ``count`` realizations of sum_r lambda_r chi2_1, reproducibly.

    A dedicated Philox generator is created per call; no global RNG state.
    """
    if count < 1:
        raise DimensionMismatch(f"count must be >= 1, got {count}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    lam = spec.lambdas
    out = np.empty(count)
    block = max(1, int(10_000_000 // max(lam.size, 1)))
    for start in range(0, count, block):
        stop = min(start + block, count)
        draws = rng.chisquare(1.0, size=(stop - start, lam.size))
        out[start:stop] = draws @ lam
    return out


def dense_omega_traces(ctx: HypothesisContext, w: WeightSpec, sigmas) -> OmegaTraces:
    """Exact population traces from the spectrum (estimated = False)."""
    lam = omega_spectrum(ctx, w, sigmas).lambdas
    tr = float(np.sum(lam))
    return OmegaTraces(
        tr_omega=tr,
        tr2_omega=tr * tr,
        tr_omega_sq=float(np.sum(lam**2)),
        estimated=False,
    )


def d_star(ctx: HypothesisContext, w: WeightSpec, sigmas) -> float:
    """Adaptivity index tr^3(O^2) / tr^2(O^3) of the exact mixture.

    The mixture's skewness equals sqrt(8 / d_star); the index lies in
    [1, d] with d the matching chi-square degrees of freedom.
    """
    lam = omega_spectrum(ctx, w, sigmas).lambdas
    tr_sq = float(np.sum(lam**2))
    tr_cu = float(np.sum(lam**3))
    if tr_cu == 0.0:
        raise DegenerateTest("tr(Omega^3) = 0; the mixture is degenerate")
    return tr_sq**3 / tr_cu**2


def population_pair_traces(
    w: WeightSpec, sigmas, p: int
) -> tuple[np.ndarray, np.ndarray]:
    """Exact (tr(W Sigma_i))_i and (tr(W Sigma_i W Sigma_j))_ij, blockwise.

    Works from the k dense p x p covariances directly, so it stays usable
    where the kp x kp spectrum path would trip the size guard. Serves as the
    independent route against which the spectrum traces are checked.
    """
    mats = _as_sigma_list(sigmas, len(list(sigmas)), p)
    k = len(mats)
    weighted = [s * w.b2[:, None] + np.outer(w.a, w.a @ s) for s in mats]
    t1 = np.array([float(np.trace(m)) for m in weighted])
    t2 = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            t2[i, j] = t2[j, i] = float(np.sum(weighted[i] * weighted[j].T))
    return t1, t2


def population_omega_traces(
    ctx: HypothesisContext, w: WeightSpec, sigmas
) -> OmegaTraces:
    """Exact traces assembled from blockwise pair traces and A's entries."""
    t1, t2 = population_pair_traces(w, sigmas, w.p)
    if t1.size != ctx.k:
        raise DimensionMismatch(f"expected {ctx.k} covariances, got {t1.size}")
    tr = float(np.diag(ctx.a) @ t1)
    tr_sq = float(np.sum(ctx.a**2 * t2))
    return OmegaTraces(
        tr_omega=tr, tr2_omega=tr * tr, tr_omega_sq=tr_sq, estimated=False
    )

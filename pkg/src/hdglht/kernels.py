"""Weighted trace functionals of sample covariances, in structured form.

Everything here works from row-centered data matrices, never from a dense
p x p covariance:

    tr(W S_i)        = sum_j x_j^T W x_j / (n_i - 1)
    tr(W S_i W S_j)  = ||X_i W X_j^T||_F^2 / ((n_i - 1)(n_j - 1))

with X the centered data. The two finite-sample corrected estimators of
tr^2(W Sigma) and tr{(W Sigma)^2} use these plug-ins; the combined
``omega_traces_estimated`` assembles the three calibration traces with the
entries of the idempotent matrix A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .contrasts import HypothesisContext
from .errors import DimensionMismatch, TooFewObservations
from .weights import WeightSpec, weight_rows

__all__ = [
    "GroupSample",
    "OmegaTraces",
    "group_sample",
    "tr_w_sigma",
    "tr_w_sigma_pair",
    "est_tr2_w_sigma",
    "est_tr_w_sigma_sq",
    "assemble_omega_traces",
    "omega_traces_estimated",
]


@dataclass(frozen=True)
class GroupSample:
    """One group's observations (rows = subjects) with the cached mean."""

    data: np.ndarray
    mean: np.ndarray

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @cached_property
    def centered(self) -> np.ndarray:
        c = self.data - self.mean
        c.setflags(write=False)
        return c


def group_sample(data) -> GroupSample:
    """Wrap an (n, p) observation matrix, computing the column mean once."""
    arr = np.array(data, dtype=float, copy=True)
    if arr.ndim != 2:
        raise DimensionMismatch(f"group data must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"group data must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("group data contains non-finite values")
    mean = arr.mean(axis=0)
    arr.setflags(write=False)
    mean.setflags(write=False)
    return GroupSample(data=arr, mean=mean)


@dataclass(frozen=True)
class OmegaTraces:
    """The triple (tr O, tr^2 O, tr O^2), exact or estimated.

    Estimated triples can violate population inequalities (and even go
    negative); they are reported raw and clamped only by the test engine.
    """

    tr_omega: float
    tr2_omega: float
    tr_omega_sq: float
    estimated: bool

    def __post_init__(self):
        for name in ("tr_omega", "tr2_omega", "tr_omega_sq"):
            if not math.isfinite(getattr(self, name)):
                raise DimensionMismatch(f"{name} is not finite")


def _require_n(s: GroupSample, least: int) -> None:
    if s.n < least:
        raise TooFewObservations(
            f"group with n={s.n} observations; this kernel needs n >= {least}"
        )


def tr_w_sigma(w: WeightSpec, s: GroupSample) -> float:
    """Plug-in trace tr(W S) of the unbiased sample covariance, O(n p)."""
    _require_n(s, 2)
    if s.p != w.p:
        raise DimensionMismatch(f"sample p={s.p} but weights p={w.p}")
    x = s.centered
    quad = float(np.einsum("jl,l,jl->", x, w.b2, x)) + float(np.sum((x @ w.a) ** 2))
    return quad / (s.n - 1)


def tr_w_sigma_pair(w: WeightSpec, s_i: GroupSample, s_j: GroupSample) -> float:
    """tr(W S_i W S_j), symmetric in its sample arguments, O(n_i n_j p)."""
    _require_n(s_i, 2)
    _require_n(s_j, 2)
    if s_i.p != w.p or s_j.p != w.p:
        raise DimensionMismatch(
            f"sample dims p={s_i.p},{s_j.p} but weights p={w.p}"
        )
    m = s_i.centered @ weight_rows(w, s_j.centered).T
    return float(np.sum(m * m)) / ((s_i.n - 1) * (s_j.n - 1))


def _est_pair_from_plugins(n: int, t1: float, t2: float) -> tuple[float, float]:
    """Corrected estimators of (tr^2(W Sigma), tr{(W Sigma)^2}).

    ``t1`` and ``t2`` are the plug-ins tr(W S) and tr{(W S)^2}. Both
    estimators are exactly unbiased for normal data and may be negative in
    small samples.
    """
    scale = (n - 2) * (n + 1)
    est_tr2 = (n - 1) * n / scale * (t1 * t1 - 2.0 / n * t2)
    est_sq = (n - 1) ** 2 / scale * (t2 - t1 * t1 / (n - 1))
    return est_tr2, est_sq


def est_tr2_w_sigma(w: WeightSpec, s: GroupSample) -> float:
    """Estimator of tr^2(W Sigma); needs n >= 3."""
    _require_n(s, 3)
    t1 = tr_w_sigma(w, s)
    t2 = tr_w_sigma_pair(w, s, s)
    return _est_pair_from_plugins(s.n, t1, t2)[0]


def est_tr_w_sigma_sq(w: WeightSpec, s: GroupSample) -> float:
    """Estimator of tr{(W Sigma)^2}; needs n >= 3."""
    _require_n(s, 3)
    t1 = tr_w_sigma(w, s)
    t2 = tr_w_sigma_pair(w, s, s)
    return _est_pair_from_plugins(s.n, t1, t2)[1]


def check_samples(ctx: HypothesisContext, samples) -> int:
    """Validate group count against the context and a common p; returns p."""
    samples = list(samples)
    if len(samples) != ctx.k:
        raise DimensionMismatch(
            f"context expects k={ctx.k} groups, got {len(samples)}"
        )
    p = samples[0].p
    for idx, s in enumerate(samples):
        if s.p != p:
            raise DimensionMismatch(
                f"group {idx} has p={s.p}, expected {p} like group 0"
            )
        if s.n != ctx.n[idx]:
            raise DimensionMismatch(
                f"group {idx} has n={s.n}, context was built for n={ctx.n[idx]}"
            )
    return p


def assemble_omega_traces(a, t1, est_tr2, est_sq, cross) -> OmegaTraces:
    """Combine per-group trace pieces with the entries of A.

    tr O      = sum_i a_ii t_i
    tr^2 O    = sum_i a_ii^2 est_tr2_i  + 2 sum_{i<j} a_ii a_jj t_i t_j
    tr O^2    = sum_i a_ii^2 est_sq_i   + 2 sum_{i<j} a_ij^2 cross_ij

    ``cross`` holds the pairwise plug-ins tr(W S_i W S_j); its diagonal is
    ignored (the corrected per-group ``est_sq`` enters instead).
    """
    a = np.asarray(a, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    est_tr2 = np.asarray(est_tr2, dtype=float)
    est_sq = np.asarray(est_sq, dtype=float)
    cross = np.asarray(cross, dtype=float)
    diag = np.diag(a)
    k = diag.size
    tr_omega = float(diag @ t1)
    tr2 = float(diag**2 @ est_tr2)
    trsq = float(diag**2 @ est_sq)
    for i in range(k):
        for j in range(i + 1, k):
            tr2 += 2.0 * diag[i] * diag[j] * t1[i] * t1[j]
            trsq += 2.0 * a[i, j] ** 2 * cross[i, j]
    return OmegaTraces(
        tr_omega=tr_omega, tr2_omega=tr2, tr_omega_sq=trsq, estimated=True
    )


def omega_traces_estimated(
    ctx: HypothesisContext, w: WeightSpec, samples
) -> OmegaTraces:
    """Ratio-consistent estimates of the three calibration traces.

    Per-group pieces are the plug-in t_i = tr(W S_i), the corrected
    estimators of tr^2(W Sigma_i) and tr{(W Sigma_i)^2}, and the pairwise
    plug-ins tr(W S_i W S_j); ``assemble_omega_traces`` combines them.
    Every group needs n_i >= 3.
    """
    samples = list(samples)
    p = check_samples(ctx, samples)
    if p != w.p:
        raise DimensionMismatch(f"samples have p={p} but weights p={w.p}")
    for s in samples:
        _require_n(s, 3)

    k = ctx.k
    t1 = np.empty(k)
    est_tr2 = np.empty(k)
    est_sq = np.empty(k)
    for i, s in enumerate(samples):
        t1[i] = tr_w_sigma(w, s)
        self_pair = tr_w_sigma_pair(w, s, s)
        est_tr2[i], est_sq[i] = _est_pair_from_plugins(s.n, t1[i], self_pair)
    cross = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            cross[i, j] = cross[j, i] = tr_w_sigma_pair(w, samples[i], samples[j])
    return assemble_omega_traces(ctx.a, t1, est_tr2, est_sq, cross)

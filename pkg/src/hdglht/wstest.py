"""The test engine: statistic, chi-square calibration, decisions, power.

The statistic is the weighted quadratic form

    T = sum_{i,j} h_ij  ybar_i^T W ybar_j,

calibrated against beta * chi2_d with beta and d matched to the first two
cumulants of the exact normal-theory null law:

    beta = tr(O^2) / tr(O),   d = tr^2(O) / tr(O^2).

The three traces come from ``omega_traces_estimated`` on data or from the
oracle module when population covariances are known.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .contrasts import HypothesisContext
from .errors import DegenerateTest, DimensionMismatch, InvalidAlpha, SizeGuardExceeded
from .kernels import (
    OmegaTraces,
    check_samples,
    omega_traces_estimated,
    tr_w_sigma_pair,
)
from .special import chi2_sf, chi2_upper_quantile, normal_cdf, normal_upper_quantile
from .weights import WeightSpec, weight_rows

__all__ = [
    "TestReport",
    "statistic_tn",
    "ws_fit",
    "chi2_upper_quantile",
    "run_test",
    "plug_in_d_star",
    "asymptotic_power",
    "report_to_json",
    "report_from_json",
]

CLAMPED_ESTIMATE = "ClampedEstimate"
_TRACE_FLOOR_RTOL = 1e-12
_D_STAR_MAX_P = 3000


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test run, JSON-serializable via ``report_to_json``."""

    t_n: float
    beta_hat: float
    d_hat: float
    p_value: float
    reject: bool
    alpha: float
    d_star: float | None
    warnings: tuple[str, ...]
    n: tuple[int, ...]
    p: int
    q: int


def _pair_quadratic(w: WeightSpec, rows: np.ndarray) -> np.ndarray:
    """Matrix of v_i^T W v_j over the rows of a (k, p) matrix."""
    return rows @ weight_rows(w, rows).T


def statistic_tn(ctx: HypothesisContext, w: WeightSpec, samples) -> float:
    """The weighted statistic sum_{ij} h_ij ybar_i^T W ybar_j, O(k^2 p)."""
    samples = list(samples)
    p = check_samples(ctx, samples)
    if p != w.p:
        raise DimensionMismatch(f"samples have p={p} but weights p={w.p}")
    means = np.stack([s.mean for s in samples])
    t = float(np.sum(ctx.h * _pair_quadratic(w, means)))
    # PSD quadratic form; tiny negatives are floating-point cancellation
    return t if t > 0.0 else 0.0


def ws_fit(traces: OmegaTraces) -> tuple[float, float, tuple[str, ...]]:
    """Match beta * chi2_d to the trace triple; clamp nonpositive estimates.

    Returns (beta, d, warnings). Any trace below 1e-12 times the magnitude
    of tr(O) is floored there and flagged ``ClampedEstimate``; if every trace
    is exactly zero (all-constant data) the test is degenerate.
    """
    scale = max(
        abs(traces.tr_omega),
        math.sqrt(abs(traces.tr2_omega)),
        math.sqrt(abs(traces.tr_omega_sq)),
    )
    if scale == 0.0:
        raise DegenerateTest("all trace estimates are zero (constant data?)")
    floor = _TRACE_FLOOR_RTOL * scale
    warnings: list[str] = []
    tr, tr2, trsq = traces.tr_omega, traces.tr2_omega, traces.tr_omega_sq
    if tr < floor:
        tr = floor
        warnings.append(CLAMPED_ESTIMATE)
    if tr2 < floor:
        tr2 = floor
        if CLAMPED_ESTIMATE not in warnings:
            warnings.append(CLAMPED_ESTIMATE)
    if trsq < floor:
        trsq = floor
        if CLAMPED_ESTIMATE not in warnings:
            warnings.append(CLAMPED_ESTIMATE)
    beta = trsq / tr
    d = tr2 / trsq
    return beta, d, tuple(warnings)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def run_test(
    ctx: HypothesisContext,
    w: WeightSpec,
    samples,
    alpha: float = 0.05,
    diagnostics: bool = False,
) -> TestReport:
    """Full test: statistic, calibration, p-value and decision.

    Deterministic for fixed inputs. ``diagnostics=True`` additionally
    computes the plug-in adaptivity index ``d_star`` (p <= 3000).
    """
    alpha = _check_alpha(alpha)
    samples = list(samples)
    t_n = statistic_tn(ctx, w, samples)
    traces = omega_traces_estimated(ctx, w, samples)
    beta, d, warnings = ws_fit(traces)
    p_value = chi2_sf(t_n / beta, d)
    d_star_val = plug_in_d_star(ctx, w, samples) if diagnostics else None
    return TestReport(
        t_n=t_n,
        beta_hat=beta,
        d_hat=d,
        p_value=p_value,
        reject=bool(p_value < alpha),
        alpha=alpha,
        d_star=d_star_val,
        warnings=warnings,
        n=ctx.n,
        p=samples[0].p,
        q=ctx.q,
    )


def plug_in_d_star(ctx: HypothesisContext, w: WeightSpec, samples) -> float:
    """Diagnostic adaptivity index from the sample covariances.

    Evaluates tr(O^2) and tr(O^3) with each Sigma_i replaced by its sample
    estimate, through structured products of the centered data (no p x p
    matrix is formed):

        tr(W S_i W S_j W S_l) = tr(C_ij C_jl C_li) / prod(n - 1)

    with C_ij = X_i W X_j^T.
    """
    samples = list(samples)
    p = check_samples(ctx, samples)
    if p > _D_STAR_MAX_P:
        raise SizeGuardExceeded(
            f"d_star diagnostic limited to p <= {_D_STAR_MAX_P}, got {p}"
        )
    k = ctx.k
    a = ctx.a
    weighted = [weight_rows(w, s.centered) for s in samples]
    cross = {}
    for i in range(k):
        for j in range(k):
            cross[i, j] = samples[i].centered @ weighted[j].T

    denom = np.array([s.n - 1 for s in samples], dtype=float)
    tr_sq = 0.0
    for i in range(k):
        for j in range(k):
            pair = float(np.sum(cross[i, j] * cross[j, i].T)) / (denom[i] * denom[j])
            tr_sq += a[i, j] ** 2 * pair
    tr_cu = 0.0
    for i in range(k):
        for j in range(k):
            for l in range(k):
                coef = a[i, j] * a[j, l] * a[l, i]
                if coef == 0.0:
                    continue
                triple = float(np.trace(cross[i, j] @ cross[j, l] @ cross[l, i]))
                tr_cu += coef * triple / (denom[i] * denom[j] * denom[l])
    if tr_cu == 0.0:
        raise DegenerateTest("plug-in tr(Omega^3) is zero")
    return tr_sq**3 / tr_cu**2


def asymptotic_power(
    ctx: HypothesisContext, w: WeightSpec, group_means, sigmas, alpha: float
) -> float:
    """Limiting power Phi(-z_alpha + tr(W M^T H M) / sqrt(2 tr(O^2))).

    ``group_means`` is the k x p matrix of population means and ``sigmas``
    the k exact covariances (dense arrays or objects with ``sigma_dense``).
    The context carries H (equal to n times its normalized limit), so the
    shift term equals n * tr(W M^T H* M) from the limit formulation.
    """
    from .oracle import population_pair_traces

    alpha = _check_alpha(alpha)
    m = np.asarray(group_means, dtype=float)
    if m.shape != (ctx.k, w.p):
        raise DimensionMismatch(
            f"mean matrix has shape {m.shape}, expected ({ctx.k}, {w.p})"
        )
    shift_num = float(np.sum(ctx.h * _pair_quadratic(w, m)))
    _, t2 = population_pair_traces(w, sigmas, w.p)
    tr_omega_sq = float(np.sum(ctx.a**2 * t2))
    if tr_omega_sq <= 0.0:
        raise DegenerateTest("tr(Omega^2) = 0; power is undefined")
    z = normal_upper_quantile(alpha)
    return normal_cdf(-z + shift_num / math.sqrt(2.0 * tr_omega_sq))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def report_to_json(report: TestReport) -> str:
    """Serialize with 17 significant digits so floats round-trip bit-exact."""
    d_star = "null" if report.d_star is None else _fmt(report.d_star)
    fields = [
        f'"statistic": {_fmt(report.t_n)}',
        f'"beta_hat": {_fmt(report.beta_hat)}',
        f'"d_hat": {_fmt(report.d_hat)}',
        f'"p_value": {_fmt(report.p_value)}',
        f'"reject": {"true" if report.reject else "false"}',
        f'"alpha": {_fmt(report.alpha)}',
        f'"d_star": {d_star}',
        f'"warnings": {json.dumps(list(report.warnings))}',
        f'"n": {json.dumps([int(v) for v in report.n])}',
        f'"p": {int(report.p)}',
        f'"q": {int(report.q)}',
    ]
    return "{" + ", ".join(fields) + "}"


def report_from_json(text: str) -> TestReport:
    doc = json.loads(text)
    return TestReport(
        t_n=float(doc["statistic"]),
        beta_hat=float(doc["beta_hat"]),
        d_hat=float(doc["d_hat"]),
        p_value=float(doc["p_value"]),
        reject=bool(doc["reject"]),
        alpha=float(doc["alpha"]),
        d_star=None if doc["d_star"] is None else float(doc["d_star"]),
        warnings=tuple(doc["warnings"]),
        n=tuple(int(v) for v in doc["n"]),
        p=int(doc["p"]),
        q=int(doc["q"]),
    )

"""Data generators and the Monte Carlo size/power harness.

Groups are drawn as y = mu + Gamma z with Gamma a factor of the group
covariance and z i.i.d. unit-variance innovations from one of three shapes:

    normal   z ~ N(0, 1)
    t4       z = t_4 / sqrt(2)
    chisq1   z = (chi2_1 - 1) / sqrt(2)

Each replication owns a counter-based random stream: a Philox generator
keyed by ``SeedSequence(entropy=seed, spawn_key=(replication,))``. Rejection
counts are therefore bit-identical for a fixed (config, seed) no matter how
replications are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .contrasts import (
    ContrastMatrix,
    build_hypothesis,
    linear_combination_contrast,
    manova_contrast,
)
from .errors import ConfigError, DegenerateTest, DimensionMismatch, InvalidP, InvalidRho
from .kernels import GroupSample, group_sample
from .weights import default_weights
from .wstest import run_test

__all__ = [
    "MODELS",
    "SCENARIOS",
    "CovFactor",
    "cov_diagonal",
    "cov_ar1",
    "cov_compound",
    "scenario_covariances",
    "factor_from_spec",
    "gen_sample",
    "alternative_means",
    "SimConfig",
    "SimResult",
    "replication_stream",
    "empirical_rejection_rate",
]

MODELS = ("normal", "t4", "chisq1")
SCENARIOS = ("s1", "s2")

_FACTOR_CHECK_MAX_P = 200


@dataclass(frozen=True)
class CovFactor:
    """A factor Gamma with Gamma Gamma^T = Sigma, applied in O(n p) when
    the structure allows.

    ``scale`` multiplies Sigma (so the factor by sqrt(scale)). Construction
    verifies the factorization in Frobenius norm for p <= 200.
    """

    kind: str  # "diagonal" | "ar1" | "compound"
    p: int
    variances: np.ndarray | None = None  # diagonal kind
    corr: float = 0.0  # ar1 kind
    coefs: tuple[float, float] = (0.0, 0.0)  # compound kind: (diag, ones)
    scale: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise InvalidP(f"p must be >= 1, got {self.p}")
        if self.scale <= 0:
            raise ConfigError(f"covariance scale must be positive, got {self.scale}")
        if self.variances is not None:
            v = np.asarray(self.variances, dtype=float).reshape(-1)
            if v.size != self.p or np.any(v <= 0):
                raise ConfigError("diagonal covariance needs p positive variances")
            v.setflags(write=False)
            object.__setattr__(self, "variances", v)
        if self.p <= _FACTOR_CHECK_MAX_P:
            g = self.gamma_dense()
            err = float(np.linalg.norm(g @ g.T - self.sigma_dense()))
            if err > 1e-10:
                raise ConfigError(
                    f"factor check failed for kind={self.kind}: ||GG^T - Sigma||_F={err:.3e}"
                )

    def scaled(self, c: float) -> "CovFactor":
        return CovFactor(
            kind=self.kind,
            p=self.p,
            variances=self.variances,
            corr=self.corr,
            coefs=self.coefs,
            scale=self.scale * c,
        )

    @cached_property
    def _ar1_chol(self) -> np.ndarray:
        idx = np.arange(self.p)
        sigma = self.corr ** np.abs(idx[:, None] - idx[None, :])
        chol = np.linalg.cholesky(sigma)
        chol.setflags(write=False)
        return chol

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Rows of z are transformed to rows of z Gamma^T."""
        root = math.sqrt(self.scale)
        if self.kind == "diagonal":
            return z * (root * np.sqrt(self.variances))
        if self.kind == "ar1":
            return root * (z @ self._ar1_chol.T)
        if self.kind == "compound":
            c1, c2 = self._compound_c1c2()
            return root * (c2 * z + (c1 - c2) * z.mean(axis=1, keepdims=True))
        raise ConfigError(f"unknown covariance kind {self.kind!r}")

    def _compound_c1c2(self) -> tuple[float, float]:
        diag_coef, ones_coef = self.coefs
        return math.sqrt(diag_coef + ones_coef * self.p), math.sqrt(diag_coef)

    def gamma_dense(self) -> np.ndarray:
        root = math.sqrt(self.scale)
        if self.kind == "diagonal":
            return root * np.diag(np.sqrt(self.variances))
        if self.kind == "ar1":
            return root * self._ar1_chol
        if self.kind == "compound":
            c1, c2 = self._compound_c1c2()
            j_over_p = np.full((self.p, self.p), 1.0 / self.p)
            return root * (c2 * (np.eye(self.p) - j_over_p) + c1 * j_over_p)
        raise ConfigError(f"unknown covariance kind {self.kind!r}")

    def sigma_dense(self) -> np.ndarray:
        if self.kind == "diagonal":
            return self.scale * np.diag(self.variances)
        if self.kind == "ar1":
            idx = np.arange(self.p)
            return self.scale * self.corr ** np.abs(idx[:, None] - idx[None, :])
        if self.kind == "compound":
            diag_coef, ones_coef = self.coefs
            return self.scale * (
                diag_coef * np.eye(self.p) + ones_coef * np.ones((self.p, self.p))
            )
        raise ConfigError(f"unknown covariance kind {self.kind!r}")


def cov_diagonal(variance, p: int) -> CovFactor:
    v = np.asarray(variance, dtype=float)
    if v.ndim == 0:
        v = np.full(p, float(v))
    return CovFactor(kind="diagonal", p=p, variances=v)


def cov_ar1(corr: float, p: int) -> CovFactor:
    if not (-1.0 < corr < 1.0):
        raise ConfigError(f"ar1 correlation must lie in (-1, 1), got {corr}")
    return CovFactor(kind="ar1", p=p, corr=float(corr))


def cov_compound(diag_coef: float, ones_coef: float, p: int) -> CovFactor:
    if diag_coef <= 0 or diag_coef + ones_coef * p <= 0:
        raise ConfigError("compound-symmetric covariance is not positive definite")
    return CovFactor(kind="compound", p=p, coefs=(float(diag_coef), float(ones_coef)))


def scenario_covariances(scenario: str, p: int) -> tuple[CovFactor, ...]:
    """The two built-in four-group covariance layouts."""
    if p < 1:
        raise InvalidP(f"p must be >= 1, got {p}")
    if scenario == "s1":
        return (
            cov_ar1(0.4, p),
            cov_diagonal(1.0, p),
            cov_diagonal(3.0, p),
            cov_diagonal(6.0, p),
        )
    if scenario == "s2":
        return (
            cov_diagonal(3.0, p),
            cov_diagonal(5.0, p),
            cov_compound(0.09, 0.01, p),
            cov_diagonal(3.0, p).scaled(2.0),
        )
    raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def factor_from_spec(spec, p: int) -> CovFactor:
    """Parse a custom covariance descriptor.

    Accepted forms (sequence or dict):
        ("diagonal", variance)            -> variance * I
        ("ar1", corr) or ("ar1", corr, scale)
        ("compound", diag_coef, ones_coef)
        ("scaled", base_spec, c)
    """
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "diagonal":
            return cov_diagonal(spec["variance"], p)
        if kind == "ar1":
            f = cov_ar1(spec["corr"], p)
            return f.scaled(spec["scale"]) if "scale" in spec else f
        if kind == "compound":
            return cov_compound(spec["diag"], spec["ones"], p)
        if kind == "scaled":
            return factor_from_spec(spec["base"], p).scaled(spec["factor"])
        raise ConfigError(f"unknown covariance kind {kind!r}")
    spec = tuple(spec)
    kind = spec[0]
    if kind == "diagonal":
        return cov_diagonal(spec[1], p)
    if kind == "ar1":
        f = cov_ar1(spec[1], p)
        return f.scaled(spec[2]) if len(spec) > 2 else f
    if kind == "compound":
        return cov_compound(spec[1], spec[2], p)
    if kind == "scaled":
        return factor_from_spec(spec[1], p).scaled(spec[2])
    raise ConfigError(f"unknown covariance kind {kind!r}")


def _innovations(model: str, rng: np.random.Generator, shape) -> np.ndarray:
    if model == "normal":
        return rng.standard_normal(shape)
    if model == "t4":
        return rng.standard_t(4, size=shape) / math.sqrt(2.0)
    if model == "chisq1":
        return (rng.chisquare(1.0, size=shape) - 1.0) / math.sqrt(2.0)
    raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")


def gen_sample(
    model: str, factor: CovFactor, mu, n: int, rng: np.random.Generator
) -> GroupSample:
    """Draw one group: rows mu + Gamma z with unit-variance innovations."""
    if n < 1:
        raise DimensionMismatch(f"group size must be >= 1, got {n}")
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.size != factor.p:
        raise DimensionMismatch(f"mean has length {mu.size}, factor p={factor.p}")
    z = _innovations(model, rng, (n, factor.p))
    return group_sample(factor.apply(z) + mu)


def alternative_means(r: float, rho: float, p: int, n) -> np.ndarray:
    """Mean matrix for the shifted-fourth-group alternative.

    Groups 1-3 stay at zero; group 4 gets round(p^(1-rho)) equal nonzero
    entries of value sqrt(2 r (sum_i 1/n_i) log p), spread evenly over the
    coordinates (deterministic placement). r = 0 returns the zero matrix.
    """
    if not (0.0 <= rho <= 1.0):
        raise InvalidRho(f"rho must lie in [0, 1], got {rho}")
    if r < 0:
        raise ConfigError(f"signal strength r must be >= 0, got {r}")
    if p < 1:
        raise InvalidP(f"p must be >= 1, got {p}")
    sizes = tuple(int(v) for v in np.asarray(n).reshape(-1))
    if len(sizes) != 4:
        raise DimensionMismatch(f"alternative means are defined for 4 groups, got {len(sizes)}")
    means = np.zeros((4, p))
    if r == 0.0:
        return means
    m = int(round(p ** (1.0 - rho)))
    m = max(1, min(m, p))
    positions = (np.arange(m) * p) // m
    value = math.sqrt(2.0 * r * sum(1.0 / v for v in sizes) * math.log(p))
    means[3, positions] = value
    return means


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo cell. All fields are plain data (picklable)."""

    model: str
    scenario: str | tuple
    contrast: str | tuple
    p: int
    n: tuple[int, ...]
    r: float
    rho: float
    alpha: float = 0.05
    reps: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.r < 0:
            raise ConfigError(f"r must be >= 0, got {self.r}")
        if not (0.0 <= self.rho <= 1.0):
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        sizes = tuple(int(v) for v in self.n)
        if len(sizes) < 2 or any(v < 3 for v in sizes):
            raise ConfigError(f"need k >= 2 groups of size >= 3, got {sizes}")
        object.__setattr__(self, "n", sizes)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class SimResult:
    rate: float
    reps: int
    seed: int
    degenerate_count: int
    decisions: np.ndarray | None = None


def replication_stream(seed: int, replication: int) -> np.random.Generator:
    """Counter-based stream for one replication: Philox keyed by (seed, t)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replication),))
    return np.random.Generator(np.random.Philox(ss))


def resolve_contrast(spec, k: int) -> ContrastMatrix:
    if isinstance(spec, ContrastMatrix):
        return spec
    if isinstance(spec, str):
        if spec == "manova":
            return manova_contrast(k)
        if spec.startswith("combo:"):
            coeffs = [float(v) for v in spec[len("combo:") :].split(",")]
            if len(coeffs) != k:
                raise ConfigError(
                    f"combination contrast has {len(coeffs)} coefficients for k={k}"
                )
            return linear_combination_contrast(coeffs)
        raise ConfigError(f"unknown contrast spec {spec!r}")
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 1:
        return linear_combination_contrast(arr)
    return ContrastMatrix(arr)


def resolve_covariances(scenario, p: int, k: int) -> tuple[CovFactor, ...]:
    if isinstance(scenario, str):
        factors = scenario_covariances(scenario, p)
    else:
        factors = tuple(factor_from_spec(s, p) for s in scenario)
    if len(factors) != k:
        raise ConfigError(
            f"covariance layout provides {len(factors)} groups but n has k={k}"
        )
    return factors


def _build_cell(config: SimConfig):
    k = len(config.n)
    ctx = build_hypothesis(resolve_contrast(config.contrast, k), config.n)
    w = default_weights(config.p)
    factors = resolve_covariances(config.scenario, config.p, k)
    if config.r == 0.0:
        means = np.zeros((k, config.p))
    else:
        means = alternative_means(config.r, config.rho, config.p, config.n)
    return ctx, w, factors, means


def _run_block(config: SimConfig, start: int, stop: int):
    ctx, w, factors, means = _build_cell(config)
    k = len(config.n)
    rejects = np.zeros(stop - start, dtype=bool)
    degenerate = 0
    for t in range(start, stop):
        rng = replication_stream(config.seed, t)
        samples = [
            gen_sample(config.model, factors[i], means[i], config.n[i], rng)
            for i in range(k)
        ]
        try:
            report = run_test(ctx, w, samples, config.alpha)
        except DegenerateTest:
            degenerate += 1
            continue
        rejects[t - start] = report.reject
    return rejects, degenerate


def empirical_rejection_rate(
    config: SimConfig, workers: int = 1, keep_decisions: bool = False
) -> SimResult:
    """Rejection frequency over ``config.reps`` independent replications.

    Replication t uses the stream keyed by (seed, t); degenerate
    replications count as non-rejections and are tallied. The decision
    vector is identical for any number of workers.
    """
    _build_cell(config)  # validate the cell up front, before forking
    reps = config.reps
    workers = max(1, int(workers))
    if workers == 1 or reps < 2 * workers:
        decisions, degenerate = _run_block(config, 0, reps)
    else:
        bounds = np.linspace(0, reps, workers + 1, dtype=int)
        blocks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        decisions = np.zeros(reps, dtype=bool)
        degenerate = 0
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, config, a, b) for a, b in blocks]
            for fut, (a, b) in zip(futures, blocks):
                block, degen = fut.result()
                decisions[a:b] = block
                degenerate += degen
    if degenerate == reps:
        raise DegenerateTest("every replication produced a degenerate test")
    rate = float(np.count_nonzero(decisions)) / reps
    return SimResult(
        rate=rate,
        reps=reps,
        seed=config.seed,
        degenerate_count=degenerate,
        decisions=decisions if keep_decisions else None,
    )

"""Random-integration tests for general linear hypotheses on the means of
several high-dimensional samples with unequal group covariances.

The statistic integrates a projected squared norm of the estimated mean
contrast over a product weight density, which collapses to the quadratic
form mu_hat^T (H x W) mu_hat with a diagonal-plus-rank-one weight matrix W.
Its null distribution is calibrated by a two-cumulant chi-square fit
(Welch-Satterthwaite), with trace quantities estimated from the data.
"""

__version__ = "0.1.0"

from . import errors
from .contrasts import (
    ContrastMatrix,
    HypothesisContext,
    build_hypothesis,
    linear_combination_contrast,
    manova_contrast,
)
from .kernels import (
    GroupSample,
    OmegaTraces,
    est_tr2_w_sigma,
    est_tr_w_sigma_sq,
    group_sample,
    omega_traces_estimated,
    tr_w_sigma,
    tr_w_sigma_pair,
)
from .simulate import (
    SimConfig,
    SimResult,
    alternative_means,
    empirical_rejection_rate,
    gen_sample,
    scenario_covariances,
)
from .weights import WeightSpec, apply_weight, default_weights, weight_quadratic
from .wstest import (
    TestReport,
    asymptotic_power,
    chi2_upper_quantile,
    plug_in_d_star,
    report_from_json,
    report_to_json,
    run_test,
    statistic_tn,
    ws_fit,
)

__all__ = [
    "__version__",
    "errors",
    "ContrastMatrix",
    "HypothesisContext",
    "build_hypothesis",
    "manova_contrast",
    "linear_combination_contrast",
    "WeightSpec",
    "default_weights",
    "apply_weight",
    "weight_quadratic",
    "GroupSample",
    "group_sample",
    "OmegaTraces",
    "tr_w_sigma",
    "tr_w_sigma_pair",
    "est_tr2_w_sigma",
    "est_tr_w_sigma_sq",
    "omega_traces_estimated",
    "TestReport",
    "statistic_tn",
    "ws_fit",
    "chi2_upper_quantile",
    "run_test",
    "plug_in_d_star",
    "asymptotic_power",
    "report_to_json",
    "report_from_json",
    "SimConfig",
    "SimResult",
    "scenario_covariances",
    "gen_sample",
    "alternative_means",
    "empirical_rejection_rate",
]

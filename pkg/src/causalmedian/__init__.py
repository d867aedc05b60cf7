"""Causal difference-in-medians estimation under confounding.

Estimate the population difference in median outcomes between exposed and
unexposed groups from observational data, with five adjusted strategies
(median regression, inverse-probability weighting, weighted median
regression, and two flavours of outcome-model standardization) next to the
unadjusted contrast, percentile-bootstrap inference, a reproducible
synthetic-data engine with a direct potential-outcome oracle, and a
simulation harness with a command-line front end.
"""

__version__ = "1.0.0"

from .api import (
    GComputationApprox,
    GComputationMC,
    IPWMedians,
    MultivariableQuantileRegression,
    UnadjustedMedians,
    WeightedQuantileRegression,
)
from .data import Dataset, ModelSpec, build_design, potential_design
from .estimators import (
    EffectEstimate,
    IPWeights,
    estimate_gcomp_approx,
    estimate_gcomp_mc,
    estimate_ipw,
    estimate_multivariable_qr,
    estimate_unadjusted,
    estimate_weighted_qr,
    normalized_ip_weights,
)
from .exceptions import (
    BootstrapInstabilityError,
    CalibrationError,
    ConvergenceError,
    EmptyArmError,
    EstimationError,
    InsufficientGridError,
    InvalidWeightsError,
    PositivityError,
    SingularDesignError,
)
from .harness import METHOD_LABELS, StudyPlan, run_study
from .inference import BootstrapSummary, bootstrap_estimate
from .io import read_dataset_csv, write_dataset_csv
from .metrics import MetricsRow, ReplicateRecord, compute_metrics
from .quantiles import DensityGrid, lognormal_pdf, type1_median, weighted_quantile
from .rngs import RngStream
from .simgen import (
    CONFOUNDER_NAMES,
    DgpCoefficients,
    ScenarioConfig,
    TruthResult,
    calibrate_confounding,
    generate_dataset,
    measure_unadjusted_bias,
    true_delta_oracle,
)
from .solvers import (
    DesignMatrix,
    FitResult,
    expit,
    fit_logistic,
    fit_ols,
    fit_quantile_reg,
)

__all__ = [
    "__version__",
    "BootstrapInstabilityError",
    "BootstrapSummary",
    "CalibrationError",
    "CONFOUNDER_NAMES",
    "ConvergenceError",
    "Dataset",
    "DensityGrid",
    "DesignMatrix",
    "DgpCoefficients",
    "EffectEstimate",
    "EmptyArmError",
    "EstimationError",
    "FitResult",
    "GComputationApprox",
    "GComputationMC",
    "IPWMedians",
    "IPWeights",
    "InsufficientGridError",
    "InvalidWeightsError",
    "METHOD_LABELS",
    "MetricsRow",
    "ModelSpec",
    "MultivariableQuantileRegression",
    "PositivityError",
    "ReplicateRecord",
    "RngStream",
    "ScenarioConfig",
    "SingularDesignError",
    "StudyPlan",
    "TruthResult",
    "UnadjustedMedians",
    "WeightedQuantileRegression",
    "bootstrap_estimate",
    "build_design",
    "calibrate_confounding",
    "compute_metrics",
    "estimate_gcomp_approx",
    "estimate_gcomp_mc",
    "estimate_ipw",
    "estimate_multivariable_qr",
    "estimate_unadjusted",
    "estimate_weighted_qr",
    "expit",
    "fit_logistic",
    "fit_ols",
    "fit_quantile_reg",
    "generate_dataset",
    "lognormal_pdf",
    "measure_unadjusted_bias",
    "normalized_ip_weights",
    "potential_design",
    "read_dataset_csv",
    "run_study",
    "true_delta_oracle",
    "type1_median",
    "weighted_quantile",
    "write_dataset_csv",
]

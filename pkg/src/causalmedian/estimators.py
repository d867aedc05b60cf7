"""Point estimators of the causal difference in medians.

Six methods share one contract: dataset in, EffectEstimate out. The marginal
methods report median potential outcomes m0/m1 and their difference; the
multivariable quantile regression reports only a conditional effect (its
constant-effect model defines no marginal medians), so m0/m1 are None there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, ModelSpec, build_design, potential_design
from .exceptions import EmptyArmError, InsufficientGridError, PositivityError
from .quantiles import DensityGrid, lognormal_pdf, type1_median, weighted_quantile
from .rngs import RngStream
from .solvers import DesignMatrix, expit, fit_logistic, fit_ols, fit_quantile_reg

__all__ = [
    "EffectEstimate",
    "IPWeights",
    "estimate_unadjusted",
    "estimate_multivariable_qr",
    "normalized_ip_weights",
    "estimate_ipw",
    "estimate_weighted_qr",
    "estimate_gcomp_mc",
    "estimate_gcomp_approx",
]

# records-per-chunk budget for density evaluation, bounding the temporary
# (grid x chunk) matrix to ~32 MB
_DENSITY_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class EffectEstimate:
    """m0/m1 are median potential-outcome estimates (None when the method
    defines none); delta = m1 - m0 whenever both are present."""

    m0: float | None
    m1: float | None
    delta: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        for name in ("m0", "m1"):
            val = getattr(self, name)
            if val is not None and not math.isfinite(val):
                raise ValueError(f"{name} must be finite when present")


def _arm_masks(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    exposed = data.exposure == 1.0
    if not exposed.any():
        raise EmptyArmError("no exposed records (exposure == 1)")
    if exposed.all():
        raise EmptyArmError("no unexposed records (exposure == 0)")
    return ~exposed, exposed


def estimate_unadjusted(data: Dataset) -> EffectEstimate:
    """Difference of per-arm sample medians (type-1, smallest-value ties)."""
    unexposed, exposed = _arm_masks(data)
    m0 = type1_median(data.outcome[unexposed])
    m1 = type1_median(data.outcome[exposed])
    return EffectEstimate(
        m0,
        m1,
        m1 - m0,
        "unadjusted",
        {"n_unexposed": float(unexposed.sum()), "n_exposed": float(exposed.sum())},
    )


def estimate_multivariable_qr(data: Dataset, spec: ModelSpec) -> EffectEstimate:
    """Median regression of the outcome on exposure plus confounder main
    effects; delta is the exposure coefficient (a conditional, constant
    effect — no marginal medians are reported)."""
    if spec.kind != "quantile":
        raise ValueError(f"spec.kind must be 'quantile', got {spec.kind!r}")
    if spec.interactions:
        raise ValueError("multivariable quantile regression uses main effects only")
    _arm_masks(data)
    design = build_design(data, spec)
    fit = fit_quantile_reg(design, data.outcome, 0.5)
    return EffectEstimate(
        None,
        None,
        float(fit.coefficients[1]),
        "qr",
        {"iterations": float(fit.iterations)},
    )


@dataclass(frozen=True)
class IPWeights:
    """Per-record inverse-probability weights, normalized to sum to one
    within each arm; records outside an arm carry zero weight for it."""

    w0: np.ndarray
    w1: np.ndarray
    propensity: np.ndarray
    diagnostics: dict


def normalized_ip_weights(
    data: Dataset, ps_spec: ModelSpec, trim: float | None = None
) -> IPWeights:
    """Fit the propensity model and return normalized weights per arm.

    ``trim`` optionally caps raw weights before normalization (off by
    default). Fitted propensities must lie strictly inside (0, 1).
    """
    if ps_spec.kind != "propensity":
        raise ValueError(f"ps_spec.kind must be 'propensity', got {ps_spec.kind!r}")
    if trim is not None and trim <= 0:
        raise ValueError("trim must be positive when given")
    unexposed, exposed = _arm_masks(data)
    design = build_design(data, ps_spec)
    fit = fit_logistic(design, data.exposure)
    propensity = expit(design.values @ fit.coefficients)
    bad = np.flatnonzero((propensity <= 0.0) | (propensity >= 1.0))
    if bad.size:
        i = int(bad[0])
        raise PositivityError(
            f"fitted propensity is numerically 0 or 1 for record {i}",
            record_index=i,
        )
    raw1 = np.where(exposed, 1.0 / propensity, 0.0)
    raw0 = np.where(unexposed, 1.0 / (1.0 - propensity), 0.0)
    if trim is not None:
        raw1 = np.minimum(raw1, trim)
        raw0 = np.minimum(raw0, trim)
    w1 = raw1 / raw1.sum()
    w0 = raw0 / raw0.sum()
    diagnostics = {
        "max_weight": float(max(w0.max(), w1.max())),
        "propensity_min": float(propensity.min()),
        "propensity_max": float(propensity.max()),
    }
    return IPWeights(w0, w1, propensity, diagnostics)


def estimate_ipw(
    data: Dataset, ps_spec: ModelSpec, trim: float | None = None
) -> EffectEstimate:
    """Weighted sample medians per arm under normalized IP weights."""
    weights = normalized_ip_weights(data, ps_spec, trim)
    unexposed, exposed = _arm_masks(data)
    m0 = weighted_quantile(data.outcome[unexposed], weights.w0[unexposed], 0.5)
    m1 = weighted_quantile(data.outcome[exposed], weights.w1[exposed], 0.5)
    return EffectEstimate(m0, m1, m1 - m0, "ipw", dict(weights.diagnostics))


def estimate_weighted_qr(
    data: Dataset, ps_spec: ModelSpec, trim: float | None = None
) -> EffectEstimate:
    """Median regression of the outcome on the exposure alone, weighted by
    the combined normalized IP weights; m0 is the intercept and delta the
    exposure coefficient."""
    weights = normalized_ip_weights(data, ps_spec, trim)
    combined = weights.w0 + weights.w1
    design = DesignMatrix(
        np.column_stack([np.ones(data.n), data.exposure]), ("intercept", "a")
    )
    fit = fit_quantile_reg(design, data.outcome, 0.5, weights=combined)
    m0 = float(fit.coefficients[0])
    delta = float(fit.coefficients[1])
    diagnostics = dict(weights.diagnostics)
    diagnostics["iterations"] = float(fit.iterations)
    return EffectEstimate(m0, m0 + delta, delta, "weighted_qr", diagnostics)


def _fit_log_outcome(data: Dataset, out_spec: ModelSpec):
    if out_spec.kind != "outcome":
        raise ValueError(f"out_spec.kind must be 'outcome', got {out_spec.kind!r}")
    if out_spec.outcome_transform != "log":
        raise ValueError("g-computation requires a log outcome transform")
    if np.any(data.outcome <= 0):
        raise ValueError("outcome must be strictly positive for a log-scale model")
    _arm_masks(data)
    design = build_design(data, out_spec)
    fit = fit_ols(design, np.log(data.outcome))
    mu0 = potential_design(data, out_spec, 0) @ fit.coefficients
    mu1 = potential_design(data, out_spec, 1) @ fit.coefficients
    return fit, mu0, mu1


def estimate_gcomp_mc(
    data: Dataset, out_spec: ModelSpec, num_draws: int = 1000, rng: RngStream = None
) -> EffectEstimate:
    """Monte Carlo g-computation: fit a linear model for log outcome, then
    for each arm draw ``num_draws`` log-normal outcomes per record from the
    predicted log-scale mean and residual scale; m_a is the median of the
    pooled n*num_draws draws (smallest-value tie rule)."""
    if not isinstance(num_draws, int) or isinstance(num_draws, bool) or num_draws < 1:
        raise ValueError("num_draws must be a positive integer")
    if not isinstance(rng, RngStream):
        raise ValueError("rng must be an RngStream")
    fit, mu0, mu1 = _fit_log_outcome(data, out_spec)
    sigma = fit.residual_scale
    gen = rng.generator()
    medians = []
    for mu in (mu0, mu1):
        # the median of exp(draws) equals exp(median of draws): the type-1
        # median is an order statistic and exp is strictly increasing
        log_draws = mu[:, None] + sigma * gen.standard_normal((data.n, num_draws))
        medians.append(math.exp(type1_median(log_draws.ravel())))
    m0, m1 = medians
    return EffectEstimate(
        m0,
        m1,
        m1 - m0,
        "gcomp_mc",
        {"residual_scale": float(sigma), "num_draws": float(num_draws)},
    )


def _mean_density(points: np.ndarray, mu: np.ndarray, sigma: float) -> np.ndarray:
    total = np.zeros(points.size)
    step = max(1, _DENSITY_CHUNK_CELLS // points.size)
    for start in range(0, mu.size, step):
        block = mu[start : start + step]
        total += lognormal_pdf(points[:, None], block[None, :], sigma).sum(axis=1)
    return total / mu.size


def estimate_gcomp_approx(
    data: Dataset,
    out_spec: ModelSpec,
    grid: DensityGrid | None = None,
    min_captured_mass: float = 0.98,
) -> EffectEstimate:
    """Deterministic g-computation: average the per-record log-normal
    densities over records for each arm, accumulate mass on the grid by a
    left Riemann sum, and take m_a as the smallest grid value where the
    cumulative mass reaches one half."""
    if not 0.0 <= min_captured_mass <= 1.0:
        raise ValueError("min_captured_mass must lie in [0, 1]")
    fit, mu0, mu1 = _fit_log_outcome(data, out_spec)
    sigma = fit.residual_scale
    if sigma <= 0:
        raise ValueError(
            "residual scale is zero (perfect fit); the density approximation is undefined"
        )
    if grid is None:
        grid = DensityGrid.for_data(data.outcome)
    points = grid.points()
    medians = []
    masses = []
    for arm, mu in ((0, mu0), (1, mu1)):
        cumulative = np.cumsum(_mean_density(points, mu, sigma)) * grid.step
        mass = float(cumulative[-1])
        masses.append(mass)
        if mass < min_captured_mass:
            raise InsufficientGridError(
                f"captured probability mass {mass:.4f} for arm {arm} is below "
                f"{min_captured_mass}; widen or refine the grid"
            )
        crossing = int(np.searchsorted(cumulative, 0.5, side="left"))
        if crossing >= points.size:
            raise InsufficientGridError(
                f"cumulative mass never reaches 0.5 for arm {arm} "
                f"(total {mass:.4f}); widen the grid"
            )
        medians.append(float(points[crossing]))
    m0, m1 = medians
    return EffectEstimate(
        m0,
        m1,
        m1 - m0,
        "gcomp_approx",
        {
            "captured_mass_unexposed": masses[0],
            "captured_mass_exposed": masses[1],
            "residual_scale": float(sigma),
        },
    )

"""Estimator-object layer over the functional interface.

Each class wraps one estimation strategy with the familiar fit/get_params
protocol; ``fit`` takes a Dataset and exposes ``m0_``, ``m1_``, ``delta_``,
``diagnostics_``, and the full ``estimate_``. The outcome-model classes
additionally learn regression coefficients and can ``predict`` per-record
median outcomes.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

import numpy as np

from . import estimators
from .data import Dataset, ModelSpec
from .estimators import _fit_log_outcome
from .quantiles import DensityGrid
from .rngs import RngStream

__all__ = [
    "UnadjustedMedians",
    "MultivariableQuantileRegression",
    "IPWMedians",
    "WeightedQuantileRegression",
    "GComputationMC",
    "GComputationApprox",
]


class _MedianContrastEstimator(BaseEstimator):
    """Shared fit bookkeeping; subclasses implement _estimate."""

    def fit(self, data: Dataset):
        if not isinstance(data, Dataset):
            raise ValueError("fit expects a Dataset")
        estimate = self._estimate(data)
        self.estimate_ = estimate
        self.m0_ = estimate.m0
        self.m1_ = estimate.m1
        self.delta_ = estimate.delta
        self.diagnostics_ = dict(estimate.diagnostics)
        return self

    def _confounder_names(self, data: Dataset):
        if self.confounders is None:
            return data.confounder_names
        return tuple(self.confounders)


class UnadjustedMedians(_MedianContrastEstimator):
    """Arm-wise sample medians; no confounding adjustment."""

    def _estimate(self, data):
        return estimators.estimate_unadjusted(data)

    def _confounder_names(self, data):  # takes no covariates
        return ()


class MultivariableQuantileRegression(_MedianContrastEstimator):
    """Median regression of the outcome on exposure and confounders."""

    def __init__(self, confounders=None):
        self.confounders = confounders

    def _estimate(self, data):
        spec = ModelSpec("quantile", self._confounder_names(data))
        return estimators.estimate_multivariable_qr(data, spec)


class IPWMedians(_MedianContrastEstimator):
    """Inverse-probability-weighted arm medians."""

    def __init__(self, confounders=None, trim=None):
        self.confounders = confounders
        self.trim = trim

    def _propensity_spec(self, data):
        return ModelSpec("propensity", self._confounder_names(data))

    def _estimate(self, data):
        return estimators.estimate_ipw(data, self._propensity_spec(data), self.trim)


class WeightedQuantileRegression(IPWMedians):
    """Median regression of outcome on exposure, inverse-probability weighted."""

    def _estimate(self, data):
        return estimators.estimate_weighted_qr(
            data, self._propensity_spec(data), self.trim
        )


class _OutcomeModelEstimator(_MedianContrastEstimator):
    def _outcome_spec(self, data):
        return ModelSpec(
            "outcome", self._confounder_names(data), tuple(self.interactions), "log"
        )

    def _store_model(self, data):
        fit, _, _ = _fit_log_outcome(data, self._outcome_spec(data))
        self.coefficients_ = np.asarray(fit.coefficients, dtype=float)
        self.residual_scale_ = float(fit.residual_scale)
        self.column_labels_ = tuple(fit.column_labels)

    def predict(self, data: Dataset):
        """Median outcome predicted for each record at its observed exposure."""
        if not hasattr(self, "coefficients_"):
            raise NotFittedError("call fit before predict")
        from .data import build_design

        design = build_design(data, self._outcome_spec(data))
        return np.exp(design.values @ self.coefficients_)


class GComputationMC(_OutcomeModelEstimator):
    """Parametric simulation from a log-linear outcome model.

    delta_ is reproducible for a given seed; num_draws trades Monte Carlo
    noise against time.
    """

    def __init__(self, confounders=None, interactions=(), num_draws=1000, seed=0):
        self.confounders = confounders
        self.interactions = interactions
        self.num_draws = num_draws
        self.seed = seed

    def _estimate(self, data):
        rng = RngStream(self.seed, ("gcomp-draws",))
        estimate = estimators.estimate_gcomp_mc(
            data, self._outcome_spec(data), self.num_draws, rng
        )
        self._store_model(data)
        return estimate


class GComputationApprox(_OutcomeModelEstimator):
    """Deterministic mixture-density counterpart of GComputationMC."""

    def __init__(self, confounders=None, interactions=(), grid=None, min_captured_mass=0.98):
        self.confounders = confounders
        self.interactions = interactions
        self.grid = grid
        self.min_captured_mass = min_captured_mass

    def _estimate(self, data):
        grid = self.grid
        if grid is not None and not isinstance(grid, DensityGrid):
            lower, upper, step = grid
            grid = DensityGrid(lower, upper, step)
        estimate = estimators.estimate_gcomp_approx(
            data, self._outcome_spec(data), grid, self.min_captured_mass
        )
        self._store_model(data)
        return estimate

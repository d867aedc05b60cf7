"""Weighted quantiles, type-1 sample medians, and log-normal density tools."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidWeightsError
from .validation import (
    as_float_vector,
    require_finite,
    require_probability,
    require_same_length,
)

__all__ = [
    "weighted_quantile",
    "type1_median",
    "lognormal_pdf",
    "DensityGrid",
]

# absolute slack applied to the cumulative-weight comparison so that exact
# boundaries (e.g. equal weights summing to p) are not missed to rounding
_CUM_TOL = 1e-9


def weighted_quantile(values, weights, p: float) -> float:
    """Smallest value whose normalized cumulative weight reaches p.

    Weights are normalized to sum to one; values are scanned in increasing
    order and the first value v with sum of normalized weights of
    {values <= v} >= p is returned. With equal weights this reproduces the
    type-1 (inverse empirical CDF) sample quantile.
    """
    values = require_finite(as_float_vector(values, "values"), "values")
    weights = as_float_vector(weights, "weights")
    require_same_length("values", values, "weights", weights)
    p = require_probability(p, "p")
    if values.size == 0:
        raise ValueError("values must be non-empty")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise InvalidWeightsError("weights must be finite and nonnegative")
    total = float(weights.sum())
    if total <= 0.0:
        raise InvalidWeightsError("weights must have a positive sum")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order]) / total
    idx = int(np.searchsorted(cum, p - _CUM_TOL, side="left"))
    if idx >= values.size:
        idx = values.size - 1
    return float(values[order[idx]])


def type1_median(values) -> float:
    """Sample median as the ceil(n/2)-th order statistic (no interpolation).

    For even n this is the lower of the two middle values, so the median is
    always an observed value.
    """
    values = require_finite(as_float_vector(values, "values"), "values")
    if values.size == 0:
        raise ValueError("values must be non-empty")
    k = math.ceil(0.5 * values.size) - 1
    return float(np.partition(values, k)[k])


def lognormal_pdf(y, mu, sigma):
    """Density of exp(N(mu, sigma^2)) evaluated at y > 0; broadcasts y and mu."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("y must be positive and finite")
    if not np.all(np.isfinite(mu)):
        raise ValueError("mu must be finite")
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError("sigma must be a positive finite number")
    log_y = np.log(y)
    z = (log_y - mu) / sigma
    out = np.exp(-0.5 * z * z) / (y * sigma * math.sqrt(2.0 * math.pi))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DensityGrid:
    """Uniform evaluation grid (lower, upper, step) on the positive axis."""

    lower: float
    upper: float
    step: float

    def __post_init__(self):
        for name in ("lower", "upper", "step"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ValueError(f"{name} must be a number")
            object.__setattr__(self, name, float(val))
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lower <= 0:
            raise ValueError("lower must be positive")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.upper <= self.lower:
            raise ValueError("upper must exceed lower")

    @property
    def size(self) -> int:
        return int(math.floor((self.upper - self.lower) / self.step + 1e-9)) + 1

    def points(self) -> np.ndarray:
        return self.lower + self.step * np.arange(self.size)

    @classmethod
    def for_data(cls, y) -> "DensityGrid":
        """Data-driven grid: step max(y)/2000, spanning (step, 2*max(y))."""
        y = require_finite(as_float_vector(y, "y"), "y")
        if y.size == 0:
            raise ValueError("y must be non-empty")
        top = float(y.max())
        if top <= 0:
            raise ValueError("y must contain positive values")
        step = top / 2000.0
        return cls(step, 2.0 * top, step)

    @classmethod
    def default_simulation(cls) -> "DensityGrid":
        """The fixed grid used by the simulation harness: 0.01 to 8 by 0.01."""
        return cls(0.01, 8.0, 0.01)

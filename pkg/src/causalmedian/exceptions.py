"""Exception hierarchy.

``EstimationError`` covers numerical and statistical failures raised while
fitting, resampling, or calibrating. Input validation problems (bad shapes,
domain violations, malformed configuration) raise ``ValueError`` instead, so
callers can distinguish "your inputs are wrong" from "the computation broke".
"""

from __future__ import annotations


class EstimationError(Exception):
    """Base class for numerical and statistical failures."""


class SingularDesignError(EstimationError):
    """Design matrix is rank deficient.

    Carries the labels of the offending columns when they can be identified.
    """

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class ConvergenceError(EstimationError):
    """An iterative solver failed to converge or diverged.

    ``trace`` holds per-iteration diagnostics (iteration number, step size,
    objective) so failures can be audited.
    """

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class PositivityError(EstimationError):
    """A fitted propensity is numerically 0 or 1 for some record."""

    def __init__(self, message: str, record_index: int = -1):
        super().__init__(message)
        self.record_index = record_index


class InvalidWeightsError(EstimationError):
    """Weights are unusable (all zero, negative, or non-finite)."""


class EmptyArmError(EstimationError):
    """An exposure arm contains no records."""


class InsufficientGridError(EstimationError):
    """The density grid captures too little probability mass or never
    reaches the target quantile; a wider or finer grid is needed."""


class BootstrapInstabilityError(EstimationError):
    """Too many bootstrap replicates failed for the summary to be trusted."""


class CalibrationError(EstimationError):
    """Confounding calibration could not bracket the requested target."""

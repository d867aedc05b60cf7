"""Percentile-bootstrap standard errors and confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .estimators import EffectEstimate
from .exceptions import BootstrapInstabilityError, EstimationError
from .rngs import RngStream

__all__ = ["BootstrapSummary", "bootstrap_estimate"]


@dataclass(frozen=True)
class BootstrapSummary:
    """point is the full-data delta; point_estimate carries the full
    EffectEstimate it came from. se is the sample SD (ddof=1) of successful
    replicate deltas; the CI holds their percentile (type-7) bounds."""

    point: float
    se: float
    ci_lower: float
    ci_upper: float
    num_replicates: int
    num_failed: int
    point_estimate: EffectEstimate
    replicate_deltas: np.ndarray


def bootstrap_estimate(
    data: Dataset,
    fit_fn,
    rng: RngStream,
    num_replicates: int = 1000,
    level: float = 0.95,
    point_rng: RngStream | None = None,
) -> BootstrapSummary:
    """Resample records with replacement and summarize fit_fn's delta.

    ``fit_fn(dataset, rng_stream) -> EffectEstimate`` is applied to the full
    data first (with ``point_rng``, defaulting to a dedicated sub-stream);
    errors there propagate. Each replicate b draws its indices from
    rng.child(b, "indices") and passes rng.child(b, "estimator") to fit_fn,
    so results are independent of execution order. Replicates raising
    estimation errors (e.g. a resample that lost an arm) are excluded; more
    than 5% of them failing aborts the whole call.
    """
    if not isinstance(rng, RngStream):
        raise ValueError("rng must be an RngStream")
    if not isinstance(num_replicates, int) or isinstance(num_replicates, bool):
        raise ValueError("num_replicates must be an integer")
    if num_replicates < 2:
        raise ValueError("num_replicates must be at least 2")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    if point_rng is None:
        point_rng = rng.child("point")
    point = fit_fn(data, point_rng)

    n = data.n
    deltas = []
    failed = 0
    for b in range(num_replicates):
        indices = rng.child(b, "indices").generator().integers(0, n, size=n)
        try:
            est = fit_fn(data.subset(indices), rng.child(b, "estimator"))
        except EstimationError:
            failed += 1
            continue
        deltas.append(est.delta)
    if failed > 0.05 * num_replicates:
        raise BootstrapInstabilityError(
            f"{failed} of {num_replicates} bootstrap replicates failed "
            "(more than the 5% budget)"
        )
    values = np.asarray(deltas)
    se = float(np.std(values, ddof=1))
    alpha = (1.0 - level) / 2.0
    ci_lower, ci_upper = np.quantile(values, [alpha, 1.0 - alpha])
    return BootstrapSummary(
        point=float(point.delta),
        se=se,
        ci_lower=float(ci_lower),
        ci_upper=float(ci_upper),
        num_replicates=num_replicates,
        num_failed=failed,
        point_estimate=point,
        replicate_deltas=values,
    )

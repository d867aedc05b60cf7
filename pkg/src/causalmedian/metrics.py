"""Simulation performance measures with Monte Carlo standard errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simgen import TruthResult

__all__ = ["ReplicateRecord", "MetricsRow", "compute_metrics"]


@dataclass(frozen=True)
class ReplicateRecord:
    """One method's result on one simulated dataset."""

    scenario: str
    method: str
    replicate: int
    delta_hat: float
    se_hat: float
    ci_lower: float
    ci_upper: float

    def __post_init__(self):
        for name in ("delta_hat", "se_hat", "ci_lower", "ci_upper"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.se_hat < 0:
            raise ValueError("se_hat must be nonnegative")
        if self.ci_lower > self.ci_upper:
            raise ValueError("ci_lower must not exceed ci_upper")
        if not isinstance(self.replicate, int) or isinstance(self.replicate, bool):
            raise ValueError("replicate must be an integer")


@dataclass(frozen=True)
class MetricsRow:
    """Aggregated measures for one scenario-method cell, each with its
    Monte Carlo SE."""

    confounding: str
    scenario: str
    method: str
    num_replicates: int
    bias: float
    relative_bias_pct: float
    empirical_se: float
    model_se: float
    relative_error_se_pct: float
    coverage_pct: float
    mcse_bias: float
    mcse_relative_bias_pct: float
    mcse_empirical_se: float
    mcse_model_se: float
    mcse_relative_error_se_pct: float
    mcse_coverage_pct: float


def compute_metrics(
    records, truth: TruthResult, confounding: str = "custom"
) -> MetricsRow:
    """Aggregate one scenario-method cell of replicate records.

    With S replicates, estimates d_s, within-replicate SEs se_s, and truth
    value t: bias = mean(d) - t; relative bias = 100*bias/t; empirical SE =
    SD(d) with ddof=1; model SE = sqrt(mean(se^2)); relative error in model
    SE = 100*(model/empirical - 1); coverage = percent of CIs containing t.

    Monte Carlo SEs: MCSE(bias) = empSE/sqrt(S); MCSE(relative bias) =
    100*MCSE(bias)/|t|; MCSE(empSE) = empSE/sqrt(2(S-1)); MCSE(modelSE) =
    sqrt(Var(se^2)/(4*S*modelSE^2)) with Var using ddof=1; MCSE(coverage) =
    100*sqrt(p(1-p)/S); MCSE(relative error) is first-order propagation
    treating model and empirical SE as independent:
    100*(M/E)*sqrt((MCSE(M)/M)^2 + (MCSE(E)/E)^2).
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("need at least 2 replicate records")
    scenario = records[0].scenario
    method = records[0].method
    for r in records:
        if r.scenario != scenario or r.method != method:
            raise ValueError("records must share one scenario and method")
    theta = truth.delta_true
    if theta == 0.0:
        raise ValueError("relative bias is undefined when the true delta is zero")

    s = len(records)
    deltas = np.array([r.delta_hat for r in records])
    ses = np.array([r.se_hat for r in records])
    covered = np.array([r.ci_lower <= theta <= r.ci_upper for r in records], dtype=float)

    bias = float(deltas.mean() - theta)
    empirical_se = float(deltas.std(ddof=1))
    model_se = float(np.sqrt(np.mean(ses**2)))
    if empirical_se == 0.0:
        raise ValueError("empirical SE is zero; relative error in model SE undefined")
    relative_error = 100.0 * (model_se / empirical_se - 1.0)
    proportion = float(covered.mean())

    mcse_bias = empirical_se / math.sqrt(s)
    mcse_emp = empirical_se / math.sqrt(2.0 * (s - 1))
    if model_se > 0.0:
        mcse_model = math.sqrt(float(np.var(ses**2, ddof=1)) / (4.0 * s * model_se**2))
        mcse_rel_err = (
            100.0
            * (model_se / empirical_se)
            * math.sqrt((mcse_model / model_se) ** 2 + (mcse_emp / empirical_se) ** 2)
        )
    else:
        mcse_model = 0.0
        mcse_rel_err = 100.0 * mcse_emp / empirical_se
    return MetricsRow(
        confounding=confounding,
        scenario=scenario,
        method=method,
        num_replicates=s,
        bias=bias,
        relative_bias_pct=100.0 * bias / theta,
        empirical_se=empirical_se,
        model_se=model_se,
        relative_error_se_pct=relative_error,
        coverage_pct=100.0 * proportion,
        mcse_bias=mcse_bias,
        mcse_relative_bias_pct=100.0 * mcse_bias / abs(theta),
        mcse_empirical_se=mcse_emp,
        mcse_model_se=mcse_model,
        mcse_relative_error_se_pct=mcse_rel_err,
        mcse_coverage_pct=100.0 * math.sqrt(proportion * (1.0 - proportion) / s),
    )

"""Dataset container, model specifications, and design-matrix assembly."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solvers import DesignMatrix
from .validation import (
    as_float_matrix,
    as_float_vector,
    require_binary,
    require_finite,
    require_same_length,
)

__all__ = ["Dataset", "ModelSpec", "build_design", "potential_design"]

MODEL_KINDS = ("propensity", "outcome", "quantile")
OUTCOME_TRANSFORMS = ("identity", "log")


@dataclass(frozen=True)
class Dataset:
    """Complete-case numeric data: outcome, binary exposure, named confounders.

    Exposure may be single-level here (bootstrap resamples can lose an arm);
    estimators enforce that both arms are present.
    """

    outcome: np.ndarray
    exposure: np.ndarray
    confounders: np.ndarray
    confounder_names: tuple[str, ...]

    def __post_init__(self):
        y = require_finite(as_float_vector(self.outcome, "outcome"), "outcome")
        a = require_binary(as_float_vector(self.exposure, "exposure"), "exposure")
        c = require_finite(as_float_matrix(self.confounders, "confounders"), "confounders")
        require_same_length("outcome", y, "exposure", a)
        if c.shape[0] != y.shape[0]:
            raise ValueError(
                f"confounders has {c.shape[0]} rows but outcome has {y.shape[0]}"
            )
        names = tuple(str(n) for n in self.confounder_names)
        if len(names) != c.shape[1]:
            raise ValueError(f"{len(names)} names for {c.shape[1]} confounder columns")
        if len(set(names)) != len(names):
            raise ValueError("confounder names must be unique")
        if any(not n for n in names):
            raise ValueError("confounder names must be non-empty")
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "exposure", a)
        object.__setattr__(self, "confounders", c)
        object.__setattr__(self, "confounder_names", names)

    @property
    def n(self) -> int:
        return self.outcome.shape[0]

    def confounder(self, name: str) -> np.ndarray:
        try:
            j = self.confounder_names.index(name)
        except ValueError:
            raise ValueError(
                f"unknown confounder {name!r}; dataset has {', '.join(self.confounder_names)}"
            ) from None
        return self.confounders[:, j]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
            raise ValueError("indices must be a 1-D integer array")
        return Dataset(
            self.outcome[idx],
            self.exposure[idx],
            self.confounders[idx],
            self.confounder_names,
        )


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model description.

    ``main_effects`` lists confounder names entering additively;
    ``interactions`` lists confounder names whose product with the exposure
    is included. Propensity models regress the exposure itself and therefore
    admit no exposure interactions.
    """

    kind: str
    main_effects: tuple[str, ...] = field(default=())
    interactions: tuple[str, ...] = field(default=())
    outcome_transform: str = "identity"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.outcome_transform not in OUTCOME_TRANSFORMS:
            raise ValueError(
                f"outcome_transform must be one of {OUTCOME_TRANSFORMS}, "
                f"got {self.outcome_transform!r}"
            )
        mains = tuple(str(n) for n in self.main_effects)
        inters = tuple(str(n) for n in self.interactions)
        for label, seq in (("main_effects", mains), ("interactions", inters)):
            if len(set(seq)) != len(seq):
                raise ValueError(f"{label} contains duplicate names")
            if any(not n for n in seq):
                raise ValueError(f"{label} contains an empty name")
        if self.kind == "propensity" and inters:
            raise ValueError("propensity models cannot contain exposure interactions")
        object.__setattr__(self, "main_effects", mains)
        object.__setattr__(self, "interactions", inters)


def _columns(data: Dataset, spec: ModelSpec, exposure: np.ndarray | None):
    cols = [np.ones(data.n)]
    labels = ["intercept"]
    if exposure is not None:
        cols.append(exposure)
        labels.append("a")
    for name in spec.main_effects:
        cols.append(data.confounder(name))
        labels.append(name)
    for name in spec.interactions:
        if exposure is None:
            raise ValueError("exposure interactions require the exposure term")
        cols.append(exposure * data.confounder(name))
        labels.append(f"a:{name}")
    return np.column_stack(cols), tuple(labels)


def build_design(data: Dataset, spec: ModelSpec) -> DesignMatrix:
    """Design for fitting: intercept, exposure (except propensity models),
    main effects, then exposure-confounder interactions."""
    include = spec.kind != "propensity"
    target = data.exposure if include else None
    values, labels = _columns(data, spec, target)
    return DesignMatrix(values, labels)


def potential_design(data: Dataset, spec: ModelSpec, level: int) -> np.ndarray:
    """Prediction matrix with the exposure forced to ``level`` for every
    record; column layout matches build_design for a non-propensity spec.
    Returned raw (a forced level of 0 zeroes whole columns, which a fitting
    design would reject)."""
    if level not in (0, 1):
        raise ValueError("level must be 0 or 1")
    if spec.kind == "propensity":
        raise ValueError("potential_design applies to outcome/quantile models only")
    forced = np.full(data.n, float(level))
    values, _ = _columns(data, spec, forced)
    return values

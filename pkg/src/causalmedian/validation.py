"""Input validation helpers shared by estimators, solvers, and the CLI.

All helpers raise ``ValueError`` with a message naming the offending
argument; they return the validated array (as float64, C-contiguous) so
callers can validate and convert in one step.
"""

from __future__ import annotations

import numpy as np


def as_float_vector(x, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def as_float_matrix(x, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr


def require_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def require_positive(arr: np.ndarray, name: str) -> np.ndarray:
    if np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return arr


def require_binary(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr


def require_both_levels(arr: np.ndarray, name: str) -> np.ndarray:
    require_binary(arr, name)
    if not (np.any(arr == 0) and np.any(arr == 1)):
        raise ValueError(f"{name} must contain both 0 and 1")
    return arr


def require_probability(p: float, name: str) -> float:
    p = float(p)
    if not np.isfinite(p) or not 0 < p < 1:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {p}")
    return p


def require_same_length(name_a: str, a, name_b: str, b) -> None:
    if len(a) != len(b):
        raise ValueError(
            f"{name_a} and {name_b} must have equal length, got {len(a)} and {len(b)}"
        )

"""Regression solvers: ordinary least squares, logistic regression, and
quantile regression.

Quantile regression minimizes the check loss with a Frisch-Newton interior
point method (a primal-dual solver on the bounded-variable dual program).
Two exact fast paths cover the designs that dominate simulation workloads:
intercept-only and intercept-plus-binary-covariate, where the minimizer is a
(weighted) quantile computable in closed form. If the interior point iteration
fails to converge, the solve falls back to a sparse linear-programming
formulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
from scipy.optimize import linprog

from .exceptions import ConvergenceError, SingularDesignError
from .quantiles import weighted_quantile
from .validation import (
    as_float_matrix,
    as_float_vector,
    require_both_levels,
    require_finite,
    require_probability,
    require_same_length,
)

__all__ = [
    "DesignMatrix",
    "FitResult",
    "expit",
    "fit_ols",
    "fit_logistic",
    "fit_quantile_reg",
    "check_loss",
]


@dataclass(frozen=True)
class DesignMatrix:
    """A validated regression design: intercept first, no dead columns."""

    values: np.ndarray
    column_labels: tuple[str, ...]

    def __post_init__(self):
        values = as_float_matrix(self.values, "design values")
        require_finite(values, "design values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_labels", tuple(self.column_labels))
        if len(self.column_labels) != values.shape[1]:
            raise ValueError(
                f"{len(self.column_labels)} labels for {values.shape[1]} columns"
            )
        if values.shape[0] == 0:
            raise ValueError("design has no rows")
        if not np.all(values[:, 0] == 1.0):
            raise ValueError("first design column must be an all-ones intercept")
        dead = np.flatnonzero(~values.any(axis=0))
        if dead.size:
            names = ", ".join(self.column_labels[j] for j in dead)
            raise ValueError(f"design contains identically zero columns: {names}")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def columns(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FitResult:
    """Solver output: coefficients plus convergence bookkeeping.

    ``residual_scale`` is the residual standard error sqrt(RSS / (n - p));
    it is defined only for linear (least squares) fits and is None otherwise.
    """

    coefficients: np.ndarray
    residual_scale: float | None
    converged: bool
    iterations: int
    column_labels: tuple[str, ...] = field(default=())


def expit(x):
    """Numerically stable inverse logit, elementwise; never overflows."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out) if out.ndim == 0 else out


def _collinear_columns(X: np.ndarray, labels: tuple[str, ...]) -> tuple[str, ...]:
    # greedy orthogonalization: a column (nearly) inside the span of the
    # previous ones is reported as collinear
    n, p = X.shape
    basis: list[np.ndarray] = []
    offenders = []
    for j in range(p):
        col = X[:, j].copy()
        norm0 = np.linalg.norm(col)
        for b in basis:
            col -= (b @ col) * b
        norm = np.linalg.norm(col)
        if norm <= 1e-10 * max(norm0, 1.0):
            offenders.append(labels[j] if j < len(labels) else f"column {j}")
        else:
            basis.append(col / norm)
    return tuple(offenders)


def _check_rank(X: np.ndarray, labels: tuple[str, ...]) -> None:
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] <= max(X.shape) * np.finfo(float).eps * s[0]:
        names = _collinear_columns(X, labels)
        raise SingularDesignError(
            f"design matrix is rank deficient; collinear columns: {', '.join(names) or 'unidentified'}",
            columns=names,
        )


def fit_ols(X: DesignMatrix, y, weights=None) -> FitResult:
    """Least squares fit, optionally weighted.

    Minimizes sum of w_i * (y_i - x_i'b)^2; residual_scale is
    sqrt(weighted RSS / (n - p)).
    """
    y = require_finite(as_float_vector(y, "y"), "y")
    require_same_length("design", X.values, "y", y)
    n, p = X.values.shape
    if n < p:
        raise ValueError(f"need at least as many rows ({n}) as columns ({p})")
    if weights is not None:
        w = require_finite(as_float_vector(weights, "weights"), "weights")
        require_same_length("weights", w, "y", y)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        sw = np.sqrt(w)
        Xw = X.values * sw[:, None]
        yw = y * sw
    else:
        Xw, yw = X.values, y
    _check_rank(Xw, X.column_labels)
    coef, _, _, _ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = yw - Xw @ coef
    rss = float(resid @ resid)
    scale = float(np.sqrt(rss / (n - p))) if n > p else 0.0
    return FitResult(coef, scale, True, 1, X.column_labels)


def _bernoulli_loglik(eta: np.ndarray, a: np.ndarray) -> float:
    # log L = sum a*eta - log(1 + e^eta), computed without overflow
    return float(a @ eta - (np.logaddexp(0.0, eta)).sum())


def fit_logistic(X: DesignMatrix, a) -> FitResult:
    """Maximum-likelihood logistic regression via Newton iterations.

    Converges when the largest coefficient update falls below 1e-8 or the
    log-likelihood change falls below 1e-10; iterations are capped at 100.
    Divergence (coefficients growing without bound, the signature of
    separation) raises ConvergenceError carrying the iteration trace.
    """
    a = as_float_vector(a, "a")
    require_both_levels(a, "a")
    require_same_length("design", X.values, "a", a)
    _check_rank(X.values, X.column_labels)
    V = X.values
    beta = np.zeros(V.shape[1])
    ll = _bernoulli_loglik(V @ beta, a)
    trace: list[tuple[int, float, float]] = [(0, np.inf, ll)]
    for it in range(1, 101):
        eta = V @ beta
        p = expit(eta)
        w = p * (1.0 - p)
        H = (V * w[:, None]).T @ V
        score = V.T @ (a - p)
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError:
            raise ConvergenceError(
                "logistic Newton step failed: Hessian is singular "
                "(fitted probabilities collapsed, likely separation)",
                trace=trace,
            ) from None
        # damp steps that would reduce the likelihood
        factor = 1.0
        for _ in range(30):
            candidate = beta + factor * step
            new_ll = _bernoulli_loglik(V @ candidate, a)
            if new_ll >= ll - 1e-12:
                break
            factor *= 0.5
        beta = beta + factor * step
        max_step = float(np.max(np.abs(factor * step)))
        delta_ll = new_ll - ll
        ll = new_ll
        trace.append((it, max_step, ll))
        if np.max(np.abs(beta)) > 1e3:
            raise ConvergenceError(
                "logistic coefficients diverged (perfect or quasi-separation)",
                trace=trace,
            )
        if max_step < 1e-8 or abs(delta_ll) < 1e-10:
            return FitResult(beta, None, True, it, X.column_labels)
    raise ConvergenceError("logistic regression did not converge in 100 iterations", trace=trace)


def check_loss(residuals, tau: float) -> float:
    """Total check loss sum rho_tau(u), u*(tau - 1[u<0])."""
    u = np.asarray(residuals, dtype=float)
    return float(np.sum(u * (tau - (u < 0))))


def _binary_column(col: np.ndarray) -> bool:
    return bool(np.all((col == 0.0) | (col == 1.0)) and col.min() == 0.0 and col.max() == 1.0)


def _frisch_newton(
    X: np.ndarray, y: np.ndarray, tau: float, tol: float = 1e-9, max_iter: int = 50
) -> tuple[np.ndarray, int, bool]:
    """Interior point solve of min sum rho_tau(y - Xb).

    Works on the dual box-constrained program max y'd, X'd = (1-tau) X'1,
    0 <= d <= 1, using Mehrotra predictor-corrector steps. The regression
    coefficients are the multipliers of the equality constraints. Returns
    (coefficients, iterations, converged); convergence is certified by the
    primal-dual objective gap.
    """
    n, p = X.shape
    d = np.full(n, 1.0 - tau)
    s = 1.0 - d
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    r = y - X @ beta
    z = np.maximum(-r, 0.0) + 0.1
    v = z + r
    dual_shift = (1.0 - tau) * y.sum()

    def steplen(x1, d1, x2, d2, eta=0.9995):
        alpha = 1.0
        for x, dx in ((x1, d1), (x2, d2)):
            neg = dx < 0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-x[neg] / dx[neg])) * eta)
        return min(alpha, 1.0)

    for it in range(max_iter):
        primal = check_loss(r, tau)
        gap = primal - (y @ d - dual_shift)
        if gap < tol * (1.0 + abs(primal)):
            return beta, it, True
        with np.errstate(divide="ignore", over="ignore"):
            q = 1.0 / np.maximum(z / d + v / s, 1e-300)
        if not np.all(np.isfinite(q)):
            return beta, it, False
        qX = X * q[:, None]
        M = X.T @ qX
        try:
            db_aff = np.linalg.solve(M, X.T @ (q * r))
        except np.linalg.LinAlgError:
            return beta, it, False
        dd_aff = q * (r - X @ db_aff)
        dz_aff = -z - (z / d) * dd_aff
        dv_aff = -v + (v / s) * dd_aff
        ds_aff = -dd_aff
        ap = steplen(d, dd_aff, s, ds_aff)
        ad = steplen(z, dz_aff, v, dv_aff)
        mu_now = (d @ z + s @ v) / (2 * n)
        mu_aff = (
            (d + ap * dd_aff) @ (z + ad * dz_aff) + (s + ap * ds_aff) @ (v + ad * dv_aff)
        ) / (2 * n)
        mu_target = mu_now * (mu_aff / mu_now) ** 3
        corr_z = dd_aff * dz_aff
        corr_v = ds_aff * dv_aff
        g = (mu_target - corr_z) / d - (mu_target - corr_v) / s + r
        try:
            db = np.linalg.solve(M, X.T @ (q * g))
        except np.linalg.LinAlgError:
            return beta, it, False
        dd = q * (g - X @ db)
        dz = (mu_target - d * z - corr_z) / d - (z / d) * dd
        dv = (mu_target - s * v - corr_v) / s + (v / s) * dd
        ds = -dd
        ap = steplen(d, dd, s, ds)
        ad = steplen(z, dz, v, dv)
        d = d + ap * dd
        s = s + ap * ds
        z = z + ad * dz
        v = v + ad * dv
        beta = beta + ad * db
        r = y - X @ beta
        if not np.all(np.isfinite(beta)):
            return beta, it, False
    return beta, max_iter, False


def _linprog_fallback(X: np.ndarray, y: np.ndarray, tau: float) -> np.ndarray:
    n, p = X.shape
    c = np.concatenate([np.zeros(p), np.full(n, tau), np.full(n, 1.0 - tau)])
    eye = scipy.sparse.identity(n, format="csc")
    A_eq = scipy.sparse.hstack([scipy.sparse.csc_matrix(X), eye, -eye], format="csc")
    bounds = [(None, None)] * p + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs")
    if not res.success:
        raise ConvergenceError(f"quantile regression LP failed: {res.message}")
    return res.x[:p]


def fit_quantile_reg(X: DesignMatrix, y, tau: float, weights=None) -> FitResult:
    """Minimize the (weighted) check loss sum w_i rho_tau(y_i - x_i'b).

    The returned objective is within 1e-6 (relative) of the true minimum;
    when the minimizer set is an interval, any point in it may be returned.
    """
    tau = require_probability(tau, "tau")
    y = require_finite(as_float_vector(y, "y"), "y")
    require_same_length("design", X.values, "y", y)
    V = X.values
    if weights is not None:
        w = require_finite(as_float_vector(weights, "weights"), "weights")
        require_same_length("weights", w, "y", y)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(w > 0):
            raise ValueError("weights must not be all zero")
    else:
        w = None

    p = V.shape[1]
    # closed-form paths: the minimizer is a weighted quantile
    if p == 1:
        wq = w if w is not None else np.ones(len(y))
        coef = np.array([weighted_quantile(y, wq, tau)])
        return FitResult(coef, None, True, 0, X.column_labels)
    if p == 2 and _binary_column(V[:, 1]) and V[:, 1].min() == 0.0:
        group = V[:, 1] == 1.0
        if group.any() and (~group).any():
            wq = w if w is not None else np.ones(len(y))
            if wq[~group].sum() > 0 and wq[group].sum() > 0:
                t0 = weighted_quantile(y[~group], wq[~group], tau)
                t1 = weighted_quantile(y[group], wq[group], tau)
                return FitResult(np.array([t0, t1 - t0]), None, True, 0, X.column_labels)

    # reduce weighted problems to unweighted: w*rho(u) = rho(w*u) for w > 0
    if w is not None:
        keep = w > 0
        Vs = V[keep] * w[keep, None]
        ys = y[keep] * w[keep]
    else:
        Vs, ys = V, y
    if Vs.shape[0] < p:
        raise SingularDesignError(
            "fewer effective rows than coefficients after zero-weight removal"
        )
    _check_rank(Vs, X.column_labels)
    beta, iters, ok = _frisch_newton(Vs, ys, tau)
    if not ok:
        beta = _linprog_fallback(Vs, ys, tau)
        iters += 1
    return FitResult(beta, None, True, iters, X.column_labels)

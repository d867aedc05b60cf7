"""Simulation-study orchestration: scenario grid x replicates x methods.

Every random draw is keyed by (master_seed, scenario id, replicate,
purpose), so replicates can run in any order on any number of workers and
produce identical results. Aggregation sorts by plan order before writing.
"""

from __future__ import annotations

import multiprocessing
import os
import sys
import time
from dataclasses import dataclass, field, fields, replace

from .data import ModelSpec
from .exceptions import EstimationError
from .inference import bootstrap_estimate
from .metrics import MetricsRow, ReplicateRecord, compute_metrics
from .quantiles import DensityGrid
from .rngs import RngStream
from .simgen import (
    CONFOUNDER_NAMES,
    DgpCoefficients,
    ScenarioConfig,
    TruthResult,
    calibrate_confounding,
    generate_dataset,
    true_delta_oracle,
)
from . import estimators

__all__ = ["StudyPlan", "run_study", "METHOD_LABELS", "plan_to_dict", "plan_from_dict"]

METHOD_LABELS = ("unadjusted", "qr", "ipw", "weighted_qr", "gcomp_mc", "gcomp_approx")

CALIBRATION_TARGETS = {"weak": 10.0, "strong": 20.0}

REPLICATE_COLUMNS = (
    "scenario",
    "method",
    "replicate",
    "delta_hat",
    "se_hat",
    "ci_lower",
    "ci_upper",
)
METRICS_COLUMNS = (
    "confounding",
    "scenario",
    "method",
    "bias",
    "relative_bias_pct",
    "empirical_se",
    "model_se",
    "relative_error_se_pct",
    "coverage_pct",
    "mcse_bias",
    "mcse_empirical_se",
    "mcse_model_se",
    "mcse_coverage_pct",
)


def _default_outcome_model() -> ModelSpec:
    return ModelSpec("outcome", CONFOUNDER_NAMES, ("c1", "c2"), "log")


def _default_propensity_model() -> ModelSpec:
    return ModelSpec("propensity", CONFOUNDER_NAMES)


@dataclass(frozen=True)
class StudyPlan:
    """Everything a study run needs; scenarios are (id, config) pairs.

    min_captured_mass defaults to 0 here (unlike the estimator's own 0.98)
    because the fixed simulation grid deliberately truncates the far upper
    tail; a missing 0.5-crossing still fails the replicate.
    """

    scenarios: tuple
    methods: tuple[str, ...] = METHOD_LABELS
    bootstrap_replicates: int = 200
    bootstrap_level: float = 0.95
    num_draws: int = 1000
    oracle_n: int = 2_000_000
    grid: DensityGrid = field(default_factory=DensityGrid.default_simulation)
    outcome_model: ModelSpec = field(default_factory=_default_outcome_model)
    propensity_model: ModelSpec = field(default_factory=_default_propensity_model)
    min_captured_mass: float = 0.0
    name: str = "study"
    out_dir: str | None = None

    def __post_init__(self):
        scenarios = tuple((str(sid), cfg) for sid, cfg in self.scenarios)
        if not scenarios:
            raise ValueError("plan needs at least one scenario")
        ids = [sid for sid, _ in scenarios]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique")
        if any(not sid for sid in ids):
            raise ValueError("scenario ids must be non-empty")
        for sid, cfg in scenarios:
            if not isinstance(cfg, ScenarioConfig):
                raise ValueError(f"scenario {sid!r} is not a ScenarioConfig")
        object.__setattr__(self, "scenarios", scenarios)
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("plan needs at least one method")
        if len(set(methods)) != len(methods):
            raise ValueError("method labels must be unique")
        unknown = [m for m in methods if m not in METHOD_LABELS]
        if unknown:
            raise ValueError(
                f"unknown methods {', '.join(unknown)}; available: {', '.join(METHOD_LABELS)}"
            )
        object.__setattr__(self, "methods", methods)
        if self.bootstrap_replicates < 2:
            raise ValueError("bootstrap_replicates must be at least 2")
        if not 0.0 < self.bootstrap_level < 1.0:
            raise ValueError("bootstrap_level must lie strictly between 0 and 1")
        if self.num_draws < 1:
            raise ValueError("num_draws must be positive")
        if self.oracle_n < 100_000:
            raise ValueError("oracle_n must be at least 100000")
        if not 0.0 <= self.min_captured_mass <= 1.0:
            raise ValueError("min_captured_mass must lie in [0, 1]")
        if self.outcome_model.kind != "outcome":
            raise ValueError("outcome_model.kind must be 'outcome'")
        if self.propensity_model.kind != "propensity":
            raise ValueError("propensity_model.kind must be 'propensity'")
        for spec in (self.outcome_model, self.propensity_model):
            stray = [
                n
                for n in (*spec.main_effects, *spec.interactions)
                if n not in CONFOUNDER_NAMES
            ]
            if stray:
                raise ValueError(
                    f"model references non-DGP variables: {', '.join(stray)}"
                )

    @property
    def quantile_model(self) -> ModelSpec:
        # the multivariable quantile regression uses main effects only
        return ModelSpec("quantile", self.outcome_model.main_effects)


def _method_fit_fn(plan: StudyPlan, method: str):
    if method == "unadjusted":
        return lambda data, rng: estimators.estimate_unadjusted(data)
    if method == "qr":
        spec = plan.quantile_model
        return lambda data, rng: estimators.estimate_multivariable_qr(data, spec)
    if method == "ipw":
        spec = plan.propensity_model
        return lambda data, rng: estimators.estimate_ipw(data, spec)
    if method == "weighted_qr":
        spec = plan.propensity_model
        return lambda data, rng: estimators.estimate_weighted_qr(data, spec)
    if method == "gcomp_mc":
        spec = plan.outcome_model
        draws = plan.num_draws
        return lambda data, rng: estimators.estimate_gcomp_mc(data, spec, draws, rng)
    if method == "gcomp_approx":
        spec = plan.outcome_model
        grid = plan.grid
        mass = plan.min_captured_mass
        return lambda data, rng: estimators.estimate_gcomp_approx(data, spec, grid, mass)
    raise ValueError(f"unknown method {method!r}")


def _run_replicate(plan: StudyPlan, sid: str, cfg: ScenarioConfig, r: int):
    """One replicate of one scenario: generate, then bootstrap every method."""
    seed = cfg.master_seed
    data = generate_dataset(cfg, RngStream(seed, (sid, r, "generation")))
    point_rng = RngStream(seed, (sid, r, "gcomp-draws"))
    boot_rng = RngStream(seed, (sid, r, "bootstrap"))
    records = []
    failures = []
    for method in plan.methods:
        fit_fn = _method_fit_fn(plan, method)
        try:
            summary = bootstrap_estimate(
                data,
                fit_fn,
                boot_rng.child(method),
                plan.bootstrap_replicates,
                plan.bootstrap_level,
                point_rng=point_rng,
            )
        except EstimationError as exc:
            failures.append((method, f"replicate {r}: {exc}"))
            continue
        records.append(
            ReplicateRecord(
                sid, method, r, summary.point, summary.se, summary.ci_lower, summary.ci_upper
            )
        )
    return records, failures


_WORKER_STATE = {}


def _init_worker(plan, resolved):
    _WORKER_STATE["plan"] = plan
    _WORKER_STATE["resolved"] = resolved


def _worker_task(task):
    index, r = task
    plan = _WORKER_STATE["plan"]
    sid, cfg = _WORKER_STATE["resolved"][index]
    return index, r, _run_replicate(plan, sid, cfg, r)


def _resolve_scenario(plan: StudyPlan, sid: str, cfg: ScenarioConfig):
    """Calibrate labelled scenarios, then compute their oracle truth."""
    target = CALIBRATION_TARGETS.get(cfg.confounding_label)
    if target is not None:
        cfg = calibrate_confounding(
            cfg, target, rng=RngStream(cfg.master_seed, (sid, 0, "calibration"))
        )
    truth = true_delta_oracle(
        cfg, plan.oracle_n, RngStream(cfg.master_seed, (sid, 0, "truth"))
    )
    return cfg, truth


def _coefficients_dict(coef: DgpCoefficients) -> dict:
    return {
        f.name: list(v) if isinstance(v := getattr(coef, f.name), tuple) else v
        for f in fields(coef)
    }


def _coefficients_from_dict(d: dict) -> DgpCoefficients:
    kwargs = {
        key: tuple(value) if isinstance(value, list) else value
        for key, value in d.items()
    }
    return DgpCoefficients(**kwargs)


def plan_to_dict(plan: StudyPlan) -> dict:
    """JSON-ready plan description (out_dir excluded: it is a runtime arg)."""
    return {
        "name": plan.name,
        "methods": list(plan.methods),
        "bootstrap_replicates": plan.bootstrap_replicates,
        "bootstrap_level": plan.bootstrap_level,
        "num_draws": plan.num_draws,
        "oracle_n": plan.oracle_n,
        "min_captured_mass": plan.min_captured_mass,
        "grid": {"lower": plan.grid.lower, "upper": plan.grid.upper, "step": plan.grid.step},
        "outcome_model": {
            "main_effects": list(plan.outcome_model.main_effects),
            "interactions": list(plan.outcome_model.interactions),
        },
        "propensity_model": {"main_effects": list(plan.propensity_model.main_effects)},
        "scenarios": [
            {
                "id": sid,
                "sigma": cfg.sigma,
                "n": cfg.n,
                "replicates": cfg.replicates,
                "master_seed": cfg.master_seed,
                "confounding": cfg.confounding_label,
                "coefficients": _coefficients_dict(cfg.dgp_coefficients),
            }
            for sid, cfg in plan.scenarios
        ],
    }


def plan_from_dict(d: dict, out_dir: str | None = None, seed: int | None = None) -> StudyPlan:
    scenarios = []
    for s in d["scenarios"]:
        scenarios.append(
            (
                s["id"],
                ScenarioConfig(
                    sigma=float(s["sigma"]),
                    n=int(s["n"]),
                    confounding_label=s.get("confounding", "custom"),
                    replicates=int(s.get("replicates", 1)),
                    master_seed=int(seed if seed is not None else s.get("master_seed", 0)),
                    dgp_coefficients=_coefficients_from_dict(s.get("coefficients", {})),
                ),
            )
        )
    grid = d.get("grid")
    outcome = d.get("outcome_model", {})
    propensity = d.get("propensity_model", {})
    return StudyPlan(
        scenarios=tuple(scenarios),
        methods=tuple(d.get("methods", METHOD_LABELS)),
        bootstrap_replicates=int(d.get("bootstrap_replicates", 200)),
        bootstrap_level=float(d.get("bootstrap_level", 0.95)),
        num_draws=int(d.get("num_draws", 1000)),
        oracle_n=int(d.get("oracle_n", 2_000_000)),
        grid=DensityGrid(grid["lower"], grid["upper"], grid["step"])
        if grid
        else DensityGrid.default_simulation(),
        outcome_model=ModelSpec(
            "outcome",
            tuple(outcome.get("main_effects", CONFOUNDER_NAMES)),
            tuple(outcome.get("interactions", ("c1", "c2"))),
            "log",
        ),
        propensity_model=ModelSpec(
            "propensity", tuple(propensity.get("main_effects", CONFOUNDER_NAMES))
        ),
        min_captured_mass=float(d.get("min_captured_mass", 0.0)),
        name=d.get("name", "study"),
        out_dir=out_dir,
    )


def _write_outputs(plan, resolved, truths, records, metrics_rows, diagnostics, workers, wall):
    from .io import write_csv, write_json

    out = plan.out_dir
    os.makedirs(out, exist_ok=True)
    write_csv(
        os.path.join(out, "replicates.csv"),
        REPLICATE_COLUMNS,
        (
            (x.scenario, x.method, x.replicate, x.delta_hat, x.se_hat, x.ci_lower, x.ci_upper)
            for x in records
        ),
    )
    write_csv(
        os.path.join(out, "metrics.csv"),
        METRICS_COLUMNS,
        (
            (
                m.confounding,
                m.scenario,
                m.method,
                m.bias,
                m.relative_bias_pct,
                m.empirical_se,
                m.model_se,
                m.relative_error_se_pct,
                m.coverage_pct,
                m.mcse_bias,
                m.mcse_empirical_se,
                m.mcse_model_se,
                m.mcse_coverage_pct,
            )
            for m in metrics_rows
        ),
    )
    sigma_by_id = {sid: cfg.sigma for sid, cfg in resolved}
    write_csv(
        os.path.join(out, "plotdata.csv"),
        ("confounding", "scenario", "sigma", "method", "relative_bias_pct", "mcse_relative_bias_pct"),
        (
            (m.confounding, m.scenario, sigma_by_id[m.scenario], m.method, m.relative_bias_pct, m.mcse_relative_bias_pct)
            for m in metrics_rows
        ),
    )
    write_json(
        os.path.join(out, "truth.json"),
        [
            {
                "scenario": sid,
                "confounding": cfg.confounding_label,
                "sigma": cfg.sigma,
                "n": cfg.n,
                "replicates": cfg.replicates,
                "delta_true": truth.delta_true,
                "m0_true": truth.m0_true,
                "m1_true": truth.m1_true,
                "oracle_n": truth.oracle_n,
                "mc_se": truth.mc_se,
                "resolved_coefficients": _coefficients_dict(cfg.dgp_coefficients),
            }
            for (sid, cfg), truth in zip(resolved, truths)
        ],
    )
    from . import __version__
    import numpy
    import scipy

    write_json(
        os.path.join(out, "manifest.json"),
        {
            "command": "simulate",
            "plan": plan_to_dict(plan),
            "workers": workers,
            "scenario_diagnostics": diagnostics,
            "versions": {
                "package": __version__,
                "python": sys.version.split()[0],
                "numpy": numpy.__version__,
                "scipy": scipy.__version__,
            },
            "wall_time_s": round(wall, 3),
        },
    )


def run_study(plan: StudyPlan, workers: int = 1):
    """Execute the full study; returns (replicate records, metrics rows).

    Scenario-level failures (truth oracle errors, or any method failing on
    more than 5% of a scenario's replicates) abort that scenario only; the
    diagnostic goes to stderr and the manifest. When plan.out_dir is set,
    replicates.csv, metrics.csv, plotdata.csv, truth.json, and manifest.json
    are written there; outputs are identical for every worker count.
    """
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ValueError("workers must be a positive integer")
    start = time.monotonic()
    diagnostics: dict[str, str] = {}
    resolved = []
    truths = []
    for sid, cfg in plan.scenarios:
        try:
            cfg_resolved, truth = _resolve_scenario(plan, sid, cfg)
        except EstimationError as exc:
            diagnostics[sid] = f"scenario setup failed: {exc}"
            print(f"scenario {sid}: aborted ({exc})", file=sys.stderr)
            continue
        resolved.append((sid, cfg_resolved))
        truths.append(truth)

    tasks = [
        (index, r)
        for index, (sid, cfg) in enumerate(resolved)
        for r in range(cfg.replicates)
    ]
    results = []
    if workers == 1 or len(tasks) <= 1:
        _init_worker(plan, resolved)
        results = [_worker_task(task) for task in tasks]
    else:
        context = multiprocessing.get_context()
        chunk = max(1, len(tasks) // (workers * 8))
        with context.Pool(workers, initializer=_init_worker, initargs=(plan, resolved)) as pool:
            results = list(pool.imap_unordered(_worker_task, tasks, chunksize=chunk))

    per_scenario_records: dict[str, list[ReplicateRecord]] = {sid: [] for sid, _ in resolved}
    failure_counts: dict[tuple[str, str], int] = {}
    failure_examples: dict[tuple[str, str], str] = {}
    for index, _, (records, failures) in results:
        sid = resolved[index][0]
        per_scenario_records[sid].extend(records)
        for method, message in failures:
            key = (sid, method)
            failure_counts[key] = failure_counts.get(key, 0) + 1
            failure_examples.setdefault(key, message)

    method_order = {m: i for i, m in enumerate(plan.methods)}
    all_records: list[ReplicateRecord] = []
    metrics_rows: list[MetricsRow] = []
    kept = []
    kept_truths = []
    for (sid, cfg), truth in zip(resolved, truths):
        budget = 0.05 * cfg.replicates
        broken = [
            (method, count)
            for (s, method), count in failure_counts.items()
            if s == sid and count > budget
        ]
        if broken:
            method, count = broken[0]
            message = (
                f"{method} failed on {count} of {cfg.replicates} replicates "
                f"(first failure: {failure_examples[(sid, method)]})"
            )
            diagnostics[sid] = message
            print(f"scenario {sid}: aborted ({message})", file=sys.stderr)
            continue
        rows = sorted(
            per_scenario_records[sid], key=lambda x: (method_order[x.method], x.replicate)
        )
        all_records.extend(rows)
        kept.append((sid, cfg))
        kept_truths.append(truth)
        for method in plan.methods:
            cell = [x for x in rows if x.method == method]
            metrics_rows.append(compute_metrics(cell, truth, cfg.confounding_label))

    if plan.out_dir is not None:
        _write_outputs(
            plan,
            kept,
            kept_truths,
            all_records,
            metrics_rows,
            diagnostics,
            workers,
            time.monotonic() - start,
        )
    return all_records, metrics_rows

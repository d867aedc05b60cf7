"""Command-line interface.

Three subcommands: ``simulate`` runs a study plan, ``estimate`` analyses a
CSV dataset, ``truth`` evaluates the oracle for one scenario. Every command
writes a manifest with the seed and fully resolved configuration; feeding a
manifest back in as the plan/config/scenario file replays the run exactly.

Exit codes: 0 success, 1 validation or configuration error, 2 numerical
failure (no method or scenario produced a result).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from . import __version__, estimators
from .config import (
    RunConfig,
    _scenario_to_dict,
    fresh_seed,
    parse_estimate_config,
    parse_plan,
    parse_scenario,
)
from .data import ModelSpec
from .exceptions import EstimationError
from .harness import CALIBRATION_TARGETS, run_study
from .inference import bootstrap_estimate
from .io import read_dataset_csv, write_json
from .rngs import RngStream
from .simgen import calibrate_confounding, true_delta_oracle

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; this interface reserves 2 for
    # numerical failures, so usage errors are remapped to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="causalmedian",
        description="Causal difference-in-medians estimation and simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a simulation study plan")
    sim.add_argument("--plan", required=True, help="plan INI file or simulate manifest")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, help="override every scenario master seed")
    sim.add_argument("--workers", type=int, default=1, help="parallel worker count")

    est = sub.add_parser("estimate", help="estimate effects on a CSV dataset")
    est.add_argument("--data", required=True, help="input CSV with header row")
    est.add_argument("--config", help="analysis INI file or estimate manifest")
    est.add_argument("--boot", type=int, help="bootstrap replicates")
    est.add_argument("--level", type=float, help="confidence level, e.g. 0.95")
    est.add_argument("--out", required=True, help="output JSON report path")
    est.add_argument("--seed", type=int, help="random seed")

    tru = sub.add_parser("truth", help="evaluate the oracle for one scenario")
    tru.add_argument("--scenario", required=True, help="scenario INI file or truth manifest")
    tru.add_argument("--oracle-n", type=int, help="oracle sample size")
    tru.add_argument("--seed", type=int, help="random seed")
    tru.add_argument("--out", required=True, help="output JSON path")
    return parser


def _versions() -> dict:
    import numpy
    import scipy

    return {
        "package": __version__,
        "python": sys.version.split()[0],
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
    }


def _cmd_simulate(args) -> int:
    plan = parse_plan(args.plan, seed=args.seed, out_dir=args.out)
    records, rows = run_study(plan, workers=args.workers)
    if not rows:
        print("no scenario completed", file=sys.stderr)
        return 2
    print(f"{plan.name}: {len(records)} replicate records, {len(rows)} metrics rows")
    for row in rows:
        print(
            f"  {row.scenario:>12s} {row.method:>12s}  relative bias "
            f"{row.relative_bias_pct:8.3f}%  (MCSE {row.mcse_relative_bias_pct:.3f})"
        )
    print(f"results written to {args.out}")
    return 0


def _cmd_truth(args) -> int:
    parsed = parse_scenario(args.scenario, seed=args.seed)
    seed = parsed.seed if parsed.seed is not None else fresh_seed()
    cfg = replace(parsed.config, master_seed=seed)
    oracle_n = args.oracle_n if args.oracle_n is not None else parsed.oracle_n
    if oracle_n is None:
        oracle_n = 2_000_000
    sid = parsed.scenario_id
    original = _scenario_to_dict(sid, cfg)
    target = CALIBRATION_TARGETS.get(cfg.confounding_label)
    if target is not None:
        cfg = calibrate_confounding(
            cfg, target, rng=RngStream(seed, (sid, 0, "calibration"))
        )
    truth = true_delta_oracle(cfg, oracle_n, RngStream(seed, (sid, 0, "truth")))
    write_json(
        args.out,
        {
            "scenario": sid,
            "confounding": cfg.confounding_label,
            "sigma": cfg.sigma,
            "delta_true": truth.delta_true,
            "m0_true": truth.m0_true,
            "m1_true": truth.m1_true,
            "oracle_n": truth.oracle_n,
            "mc_se": truth.mc_se,
            "seed": seed,
            "resolved_coefficients": _scenario_to_dict(sid, cfg)["coefficients"],
        },
    )
    write_json(
        args.out + ".manifest.json",
        {
            "command": "truth",
            "scenario_id": sid,
            "scenario": original,
            "oracle_n": oracle_n,
            "seed": seed,
            "versions": _versions(),
        },
    )
    print(
        f"{sid}: delta_true = {truth.delta_true:.6f} "
        f"(mc_se {truth.mc_se:.6f}); wrote {args.out}"
    )
    return 0


def _header_columns(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            return [cell.strip() for cell in row]
    raise ValueError(f"{path}: file is empty")


def _estimate_fit_fn(cfg: RunConfig, method: str, outcome_model, propensity_model):
    if method == "unadjusted":
        return lambda data, rng: estimators.estimate_unadjusted(data)
    if method == "qr":
        spec = ModelSpec("quantile", outcome_model.main_effects)
        return lambda data, rng: estimators.estimate_multivariable_qr(data, spec)
    if method == "ipw":
        return lambda data, rng: estimators.estimate_ipw(data, propensity_model, cfg.trim)
    if method == "weighted_qr":
        return lambda data, rng: estimators.estimate_weighted_qr(
            data, propensity_model, cfg.trim
        )
    if method == "gcomp_mc":
        return lambda data, rng: estimators.estimate_gcomp_mc(
            data, outcome_model, cfg.num_draws, rng
        )
    if method == "gcomp_approx":
        return lambda data, rng: estimators.estimate_gcomp_approx(
            data, outcome_model, cfg.grid, cfg.min_captured_mass
        )
    raise ValueError(f"unknown method {method!r}")


def _cmd_estimate(args) -> int:
    cfg = parse_estimate_config(args.config) if args.config else RunConfig()
    if args.boot is not None:
        cfg = replace(cfg, bootstrap_replicates=args.boot)
    if args.level is not None:
        cfg = replace(cfg, level=args.level)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if cfg.seed is None:
        cfg = replace(cfg, seed=fresh_seed())
    if not cfg.confounders:
        header = _header_columns(args.data)
        rest = [c for c in header if c not in (cfg.outcome, cfg.exposure)]
        if not rest:
            raise ValueError(f"{args.data}: no confounder columns in header")
        cfg = replace(cfg, confounders=tuple(rest))
    stray = [c for c in cfg.outcome_interactions if c not in cfg.confounders]
    if stray:
        raise ValueError(
            f"outcome_interactions reference unknown confounders: {', '.join(stray)}"
        )
    data, n_input, n_dropped = read_dataset_csv(
        args.data, cfg.outcome, cfg.exposure, cfg.confounders
    )
    outcome_model = ModelSpec("outcome", cfg.confounders, cfg.outcome_interactions, "log")
    propensity_model = ModelSpec("propensity", cfg.confounders)
    methods_report = {}
    n_ok = 0
    for method in cfg.methods:
        fit_fn = _estimate_fit_fn(cfg, method, outcome_model, propensity_model)
        rng = RngStream(cfg.seed, ("estimate", method))
        try:
            summary = bootstrap_estimate(
                data, fit_fn, rng, cfg.bootstrap_replicates, cfg.level
            )
        except (EstimationError, ValueError) as exc:
            methods_report[method] = {"error": str(exc), "error_type": type(exc).__name__}
            print(f"  {method}: failed ({exc})", file=sys.stderr)
            continue
        est = summary.point_estimate
        methods_report[method] = {
            "m0": est.m0,
            "m1": est.m1,
            "delta": est.delta,
            "se": summary.se,
            "ci_lower": summary.ci_lower,
            "ci_upper": summary.ci_upper,
            "num_replicates": summary.num_replicates,
            "num_failed": summary.num_failed,
            "diagnostics": est.diagnostics,
        }
        n_ok += 1
        print(
            f"  {method}: delta = {est.delta:.4f}  se = {summary.se:.4f}  "
            f"ci = [{summary.ci_lower:.4f}, {summary.ci_upper:.4f}]"
        )
    report = {
        "command": "estimate",
        "n_input": n_input,
        "n_complete": data.n,
        "n_dropped": n_dropped,
        "seed": cfg.seed,
        "level": cfg.level,
        "bootstrap_replicates": cfg.bootstrap_replicates,
        "methods": methods_report,
    }
    write_json(args.out, report)
    write_json(
        args.out + ".manifest.json",
        {
            "command": "estimate",
            "data": args.data,
            "config": cfg.to_dict(),
            "seed": cfg.seed,
            "versions": _versions(),
        },
    )
    print(
        f"analysed {data.n} complete cases ({n_dropped} dropped of {n_input}); "
        f"wrote {args.out}"
    )
    if n_ok == 0:
        print("all methods failed", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "estimate": _cmd_estimate,
        "truth": _cmd_truth,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

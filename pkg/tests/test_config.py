"""Config parsing: INI plans and scenarios, manifest replay, seed resolution."""

import json

import pytest

from causalmedian.config import (
    ParsedScenario,
    RunConfig,
    fresh_seed,
    parse_estimate_config,
    parse_plan,
    parse_scenario,
)
from causalmedian.harness import plan_to_dict
from causalmedian.quantiles import DensityGrid
from causalmedian.simgen import CONFOUNDER_NAMES

PLAN_TEXT = """
[study]
name = smoke
methods = unadjusted, ipw
replicates = 4
bootstrap_replicates = 25
bootstrap_level = 0.9
num_draws = 200
oracle_n = 150000
master_seed = 77
min_captured_mass = 0.5

[grid]
lower = 0.01
upper = 12.0
step = 0.01

[scenario:s1]
sigma = 1.0
n = 400
confounding = custom

[scenario:s2]
sigma = 0.75
n = 300
replicates = 6
master_seed = 88
confounding = custom
"""


def write(tmp_path, text, name="plan.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_plan_ini_happy_path(tmp_path):
    plan = parse_plan(write(tmp_path, PLAN_TEXT))
    assert plan.name == "smoke"
    assert plan.methods == ("unadjusted", "ipw")
    assert plan.bootstrap_replicates == 25
    assert plan.bootstrap_level == 0.9
    assert plan.num_draws == 200
    assert plan.oracle_n == 150_000
    assert plan.min_captured_mass == 0.5
    assert plan.grid == DensityGrid(0.01, 12.0, 0.01)
    ids = [sid for sid, _ in plan.scenarios]
    assert ids == ["s1", "s2"]
    s1 = dict(plan.scenarios)["s1"]
    s2 = dict(plan.scenarios)["s2"]
    assert (s1.sigma, s1.n, s1.replicates) == (1.0, 400, 4)
    assert (s2.sigma, s2.n, s2.replicates) == (0.75, 300, 6)
    # study-level seed unless the scenario pins its own
    assert s1.master_seed == 77
    assert s2.master_seed == 88
    assert plan.outcome_model.main_effects == CONFOUNDER_NAMES
    assert plan.outcome_model.interactions == ("c1", "c2")
    assert plan.propensity_model.main_effects == CONFOUNDER_NAMES


def test_seed_flag_overrides_every_scenario(tmp_path):
    plan = parse_plan(write(tmp_path, PLAN_TEXT), seed=123)
    assert all(cfg.master_seed == 123 for _, cfg in plan.scenarios)


def test_missing_seeds_resolve_to_one_shared_fresh_seed(tmp_path):
    text = PLAN_TEXT.replace("master_seed = 77\n", "").replace("master_seed = 88\n", "")
    first = parse_plan(write(tmp_path, text))
    second = parse_plan(write(tmp_path, text))
    seeds_first = {cfg.master_seed for _, cfg in first.scenarios}
    assert len(seeds_first) == 1
    assert seeds_first != {cfg.master_seed for _, cfg in second.scenarios}


def test_model_sections_override_defaults(tmp_path):
    text = PLAN_TEXT + "\n[outcome_model]\nmain_effects = c1, c2\ninteractions = c1\n"
    text += "\n[propensity_model]\nmain_effects = c1, c2, c3\n"
    plan = parse_plan(write(tmp_path, text))
    assert plan.outcome_model.main_effects == ("c1", "c2")
    assert plan.outcome_model.interactions == ("c1",)
    assert plan.propensity_model.main_effects == ("c1", "c2", "c3")


def test_scenario_coefficient_overrides(tmp_path):
    text = PLAN_TEXT + "\nc1_prevalence = 0.4\nc3_logit = -1.0, 0.5, 0.02\n"
    plan = parse_plan(write(tmp_path, text))
    coef = dict(plan.scenarios)["s2"].dgp_coefficients
    assert coef.c1_prevalence == 0.4
    assert coef.c3_logit == (-1.0, 0.5, 0.02)


@pytest.mark.parametrize(
    "mutation, match",
    [
        (("[study]", "[study]\nbogus = 1"), r"\[study\] has unknown keys: bogus"),
        (("[scenario:s1]", "[scenario:s1]\ntypo = 2"), r"\[scenario:s1\] has unknown keys"),
        (("sigma = 1.0\n", "sigma = fast\n"), "not a number"),
        (("replicates = 4", "replicates = 4.5"), "not an integer"),
        (("confounding = custom\n\n[scenario:s2]", "confounding = mild\n\n[scenario:s2]"), "must be one of"),
        (("step = 0.01", ""), r"\[grid\] needs"),
        (("methods = unadjusted, ipw", "methods = unadjusted, ridge"), "unknown methods"),
    ],
)
def test_plan_errors_name_section_and_key(tmp_path, mutation, match):
    old, new = mutation
    with pytest.raises(ValueError, match=match):
        parse_plan(write(tmp_path, PLAN_TEXT.replace(old, new)))


def test_plan_without_scenarios_rejected(tmp_path):
    with pytest.raises(ValueError, match="no .scenario:ID. sections"):
        parse_plan(write(tmp_path, "[study]\nname = x\n"))
    with pytest.raises(ValueError, match="empty scenario id"):
        parse_plan(write(tmp_path, "[scenario:  ]\nsigma = 1.0\n"))
    with pytest.raises(ValueError, match="needs sigma"):
        parse_plan(write(tmp_path, "[scenario:s1]\nn = 400\n"))


def test_plan_manifest_roundtrip(tmp_path):
    plan = parse_plan(write(tmp_path, PLAN_TEXT))
    manifest = {"command": "simulate", "plan": plan_to_dict(plan), "workers": 1}
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    replayed = parse_plan(str(path))
    assert replayed.scenarios == plan.scenarios
    assert replayed.methods == plan.methods
    assert replayed.grid == plan.grid
    assert replayed.outcome_model == plan.outcome_model
    assert replayed.bootstrap_replicates == plan.bootstrap_replicates
    assert replayed.min_captured_mass == plan.min_captured_mass


def test_plan_manifest_seed_override(tmp_path):
    plan = parse_plan(write(tmp_path, PLAN_TEXT))
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"plan": plan_to_dict(plan)}), encoding="utf-8")
    replayed = parse_plan(str(path), seed=555)
    assert all(cfg.master_seed == 555 for _, cfg in replayed.scenarios)


def test_bad_manifest_rejected(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"command": "simulate"}), encoding="utf-8")
    with pytest.raises(ValueError, match="no plan with scenarios"):
        parse_plan(str(path))
    path.write_text("{broken", encoding="utf-8")
    with pytest.raises(ValueError, match="invalid JSON"):
        parse_plan(str(path))


SCENARIO_TEXT = "[scenario:weak2]\nsigma = 1.0\nn = 1000\nconfounding = weak\nmaster_seed = 42\n"


def test_parse_scenario_ini(tmp_path):
    parsed = parse_scenario(write(tmp_path, SCENARIO_TEXT, "s.ini"))
    assert isinstance(parsed, ParsedScenario)
    assert parsed.scenario_id == "weak2"
    assert parsed.seed == 42
    assert parsed.config.sigma == 1.0
    assert parsed.config.confounding_label == "weak"
    assert parsed.config.master_seed == 42
    assert parsed.oracle_n is None


def test_parse_scenario_bare_section_and_seed_override(tmp_path):
    parsed = parse_scenario(
        write(tmp_path, "[scenario]\nsigma = 1.5\n", "s.ini"), seed=9
    )
    assert parsed.scenario_id == "scenario"
    assert parsed.seed == 9
    assert parsed.config.master_seed == 9
    unseeded = parse_scenario(write(tmp_path, "[scenario]\nsigma = 1.5\n", "s.ini"))
    assert unseeded.seed is None


def test_parse_scenario_rejects_multiple_sections(tmp_path):
    text = "[scenario:a]\nsigma = 1.0\n[scenario:b]\nsigma = 2.0\n"
    with pytest.raises(ValueError, match="exactly one"):
        parse_scenario(write(tmp_path, text, "s.ini"))


def test_parse_scenario_manifest(tmp_path):
    manifest = {
        "command": "truth",
        "scenario_id": "weak2",
        "scenario": {"id": "weak2", "sigma": 1.25, "n": 800, "confounding": "weak"},
        "oracle_n": 500_000,
        "seed": 13,
    }
    path = tmp_path / "truth.manifest.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    parsed = parse_scenario(str(path))
    assert parsed.scenario_id == "weak2"
    assert parsed.oracle_n == 500_000
    assert parsed.seed == 13
    assert parsed.config.sigma == 1.25
    assert parsed.config.master_seed == 13


ESTIMATE_TEXT = """
[data]
outcome = os_months
exposure = treated
confounders = age, stage

[estimate]
methods = ipw, gcomp_approx
bootstrap_replicates = 50
level = 0.9
num_draws = 400
min_captured_mass = 0.9
trim = 20
seed = 7
outcome_interactions = age

[grid]
lower = 0.01
upper = 18.0
step = 0.01
"""


def test_parse_estimate_config_ini(tmp_path):
    cfg = parse_estimate_config(write(tmp_path, ESTIMATE_TEXT, "e.ini"))
    assert cfg.outcome == "os_months"
    assert cfg.exposure == "treated"
    assert cfg.confounders == ("age", "stage")
    assert cfg.methods == ("ipw", "gcomp_approx")
    assert cfg.bootstrap_replicates == 50
    assert cfg.level == 0.9
    assert cfg.num_draws == 400
    assert cfg.min_captured_mass == 0.9
    assert cfg.trim == 20.0
    assert cfg.seed == 7
    assert cfg.outcome_interactions == ("age",)
    assert cfg.grid == DensityGrid(0.01, 18.0, 0.01)


def test_parse_estimate_config_rejects_unknown_section_and_keys(tmp_path):
    with pytest.raises(ValueError, match=r"unknown section \[plot\]"):
        parse_estimate_config(write(tmp_path, "[plot]\nx = 1\n", "e.ini"))
    with pytest.raises(ValueError, match="unknown keys: alpha"):
        parse_estimate_config(write(tmp_path, "[estimate]\nalpha = 0.05\n", "e.ini"))


def test_parse_estimate_manifest_roundtrip(tmp_path):
    cfg = parse_estimate_config(write(tmp_path, ESTIMATE_TEXT, "e.ini"))
    manifest = {"command": "estimate", "config": cfg.to_dict(), "seed": 99}
    path = tmp_path / "report.manifest.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    replayed = parse_estimate_config(str(path))
    assert replayed.seed == 99
    assert replayed.methods == cfg.methods
    assert replayed.grid == cfg.grid
    assert replayed.confounders == cfg.confounders
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize(
    "kwargs",
    [
        {"outcome": ""},
        {"outcome": "a"},
        {"methods": ("ipw", "ipw")},
        {"methods": ("ridge",)},
        {"methods": ()},
        {"level": 1.0},
        {"bootstrap_replicates": 1},
        {"trim": 0.0},
        {"min_captured_mass": 1.5},
        {"num_draws": 0},
        {"seed": 2**64},
        {"command": "profile"},
    ],
)
def test_run_config_validation(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


def test_fresh_seed_is_64_bit_and_varies():
    a, b = fresh_seed(), fresh_seed()
    assert 0 <= a < 2**64 and 0 <= b < 2**64
    assert a != b

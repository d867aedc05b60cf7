"""Config-file parsing for the command-line interface.

Two on-disk forms are accepted everywhere a config is expected:

* INI text with the sections documented in the README ([study], [grid],
  [outcome_model], [propensity_model], [scenario:ID]; or [data]/[estimate]
  for analysis runs; or a bare [scenario] for truth runs).
* A manifest.json emitted by a previous run, which replays it exactly.

All validation errors carry the section and key that caused them.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, fields, replace

from .data import ModelSpec
from .harness import METHOD_LABELS, StudyPlan, plan_from_dict
from .quantiles import DensityGrid
from .simgen import (
    CONFOUNDER_NAMES,
    CONFOUNDING_LABELS,
    DgpCoefficients,
    ScenarioConfig,
)

__all__ = [
    "RunConfig",
    "ParsedScenario",
    "fresh_seed",
    "parse_plan",
    "parse_scenario",
    "parse_estimate_config",
]

_COEFFICIENT_FIELDS = {f.name: f.type for f in fields(DgpCoefficients)}
_SCALAR_COEFFICIENTS = ("c1_prevalence", "c2_mean", "c2_sd", "c5_sd")

_STUDY_KEYS = {
    "name",
    "methods",
    "replicates",
    "bootstrap_replicates",
    "bootstrap_level",
    "num_draws",
    "oracle_n",
    "master_seed",
    "min_captured_mass",
}
_SCENARIO_KEYS = {
    "sigma",
    "n",
    "confounding",
    "replicates",
    "master_seed",
} | set(_COEFFICIENT_FIELDS)
_DATA_KEYS = {"outcome", "exposure", "confounders"}
_ESTIMATE_KEYS = {
    "methods",
    "bootstrap_replicates",
    "level",
    "num_draws",
    "min_captured_mass",
    "trim",
    "seed",
}


def fresh_seed() -> int:
    """Unpredictable 64-bit seed for runs that did not pin one."""
    return int.from_bytes(os.urandom(8), "big")


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for a single analysis (``estimate``) run."""

    command: str = "estimate"
    outcome: str = "y"
    exposure: str = "a"
    confounders: tuple[str, ...] = ()
    methods: tuple[str, ...] = METHOD_LABELS
    outcome_interactions: tuple[str, ...] = ()
    grid: DensityGrid | None = None
    num_draws: int = 1000
    min_captured_mass: float = 0.98
    trim: float | None = None
    bootstrap_replicates: int = 1000
    level: float = 0.95
    seed: int | None = None

    def __post_init__(self):
        if self.command not in ("simulate", "estimate", "truth"):
            raise ValueError(f"unknown command {self.command!r}")
        if not self.outcome or not self.exposure:
            raise ValueError("outcome and exposure column names must be non-empty")
        if self.outcome == self.exposure:
            raise ValueError("outcome and exposure columns must differ")
        object.__setattr__(self, "confounders", tuple(self.confounders))
        methods = tuple(self.methods)
        unknown = [m for m in methods if m not in METHOD_LABELS]
        if unknown:
            raise ValueError(
                f"unknown methods {', '.join(unknown)}; available: {', '.join(METHOD_LABELS)}"
            )
        if not methods or len(set(methods)) != len(methods):
            raise ValueError("methods must be a non-empty list without duplicates")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "outcome_interactions", tuple(self.outcome_interactions))
        if self.num_draws < 1:
            raise ValueError("num_draws must be positive")
        if not 0.0 <= self.min_captured_mass <= 1.0:
            raise ValueError("min_captured_mass must lie in [0, 1]")
        if self.trim is not None and float(self.trim) <= 0.0:
            raise ValueError("trim must be positive when given")
        if self.bootstrap_replicates < 2:
            raise ValueError("bootstrap_replicates must be at least 2")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie strictly between 0 and 1")
        if self.seed is not None and not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "outcome": self.outcome,
            "exposure": self.exposure,
            "confounders": list(self.confounders),
            "methods": list(self.methods),
            "outcome_interactions": list(self.outcome_interactions),
            "grid": None
            if self.grid is None
            else {"lower": self.grid.lower, "upper": self.grid.upper, "step": self.grid.step},
            "num_draws": self.num_draws,
            "min_captured_mass": self.min_captured_mass,
            "trim": self.trim,
            "bootstrap_replicates": self.bootstrap_replicates,
            "level": self.level,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        grid = d.get("grid")
        return cls(
            command=d.get("command", "estimate"),
            outcome=d.get("outcome", "y"),
            exposure=d.get("exposure", "a"),
            confounders=tuple(d.get("confounders", ())),
            methods=tuple(d.get("methods", METHOD_LABELS)),
            outcome_interactions=tuple(d.get("outcome_interactions", ())),
            grid=None if grid is None else DensityGrid(grid["lower"], grid["upper"], grid["step"]),
            num_draws=int(d.get("num_draws", 1000)),
            min_captured_mass=float(d.get("min_captured_mass", 0.98)),
            trim=None if d.get("trim") is None else float(d["trim"]),
            bootstrap_replicates=int(d.get("bootstrap_replicates", 1000)),
            level=float(d.get("level", 0.95)),
            seed=None if d.get("seed") is None else int(d["seed"]),
        )


@dataclass(frozen=True)
class ParsedScenario:
    scenario_id: str
    config: ScenarioConfig
    oracle_n: int | None = None
    seed: int | None = None


def _load(path: str):
    """Return a parsed JSON object, or a ConfigParser for INI text."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#")
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ValueError(f"{path}: {exc}") from None
    return parser


def _context(path, section, key):
    return f"{path}: [{section}] {key}"


def _get_float(parser, path, section, key, default=None):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{_context(path, section, key)}: not a number: {raw!r}") from None


def _get_int(parser, path, section, key, default=None):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{_context(path, section, key)}: not an integer: {raw!r}") from None


def _get_list(parser, path, section, key, default=()):
    if not parser.has_option(section, key):
        return tuple(default)
    raw = parser.get(section, key)
    return tuple(token.strip() for token in raw.split(",") if token.strip())


def _get_float_list(parser, path, section, key):
    tokens = _get_list(parser, path, section, key)
    try:
        return tuple(float(t) for t in tokens)
    except ValueError:
        raise ValueError(
            f"{_context(path, section, key)}: expected a comma-separated number list"
        ) from None


def _check_keys(parser, path, section, allowed):
    stray = [k for k in parser.options(section) if k not in allowed]
    if stray:
        raise ValueError(
            f"{path}: [{section}] has unknown keys: {', '.join(sorted(stray))}"
        )


def _parse_grid(parser, path):
    if not parser.has_section("grid"):
        return None
    _check_keys(parser, path, "grid", {"lower", "upper", "step"})
    lower = _get_float(parser, path, "grid", "lower")
    upper = _get_float(parser, path, "grid", "upper")
    step = _get_float(parser, path, "grid", "step")
    if lower is None or upper is None or step is None:
        raise ValueError(f"{path}: [grid] needs lower, upper, and step")
    return DensityGrid(lower, upper, step)


def _parse_coefficients(parser, path, section):
    """Pick up any DGP coefficient overrides present in the section."""
    overrides = {}
    for name in _COEFFICIENT_FIELDS:
        if not parser.has_option(section, name):
            continue
        if name in _SCALAR_COEFFICIENTS:
            overrides[name] = _get_float(parser, path, section, name)
        else:
            overrides[name] = _get_float_list(parser, path, section, name)
    try:
        return DgpCoefficients(**overrides) if overrides else DgpCoefficients()
    except ValueError as exc:
        raise ValueError(f"{path}: [{section}]: {exc}") from None


def _parse_scenario_section(parser, path, section, defaults, seed, auto_seed):
    _check_keys(parser, path, section, _SCENARIO_KEYS)
    sigma = _get_float(parser, path, section, "sigma")
    if sigma is None:
        raise ValueError(f"{path}: [{section}] needs sigma")
    confounding = parser.get(section, "confounding", fallback="custom")
    if confounding not in CONFOUNDING_LABELS:
        raise ValueError(
            f"{_context(path, section, 'confounding')}: must be one of "
            f"{', '.join(CONFOUNDING_LABELS)}"
        )
    if seed is not None:
        master_seed = seed
    else:
        master_seed = _get_int(parser, path, section, "master_seed")
        if master_seed is None:
            master_seed = defaults.get("master_seed")
        if master_seed is None:
            master_seed = auto_seed
    try:
        return ScenarioConfig(
            sigma=sigma,
            n=_get_int(parser, path, section, "n", defaults.get("n", 1000)),
            confounding_label=confounding,
            replicates=_get_int(
                parser, path, section, "replicates", defaults.get("replicates", 1)
            ),
            master_seed=master_seed,
            dgp_coefficients=_parse_coefficients(parser, path, section),
        )
    except ValueError as exc:
        raise ValueError(f"{path}: [{section}]: {exc}") from None


def _parse_model(parser, path, section, kind, default_mains, default_interactions=()):
    if not parser.has_section(section):
        mains, interactions = default_mains, default_interactions
    else:
        allowed = {"main_effects"} | ({"interactions"} if kind == "outcome" else set())
        _check_keys(parser, path, section, allowed)
        mains = _get_list(parser, path, section, "main_effects", default_mains)
        interactions = (
            _get_list(parser, path, section, "interactions", default_interactions)
            if kind == "outcome"
            else ()
        )
    try:
        transform = "log" if kind == "outcome" else "identity"
        return ModelSpec(kind, mains, interactions, transform)
    except ValueError as exc:
        raise ValueError(f"{path}: [{section}]: {exc}") from None


def parse_plan(path: str, seed: int | None = None, out_dir: str | None = None) -> StudyPlan:
    """Build a StudyPlan from an INI plan file or a simulate manifest.

    ``seed`` (the --seed flag) overrides every scenario's master seed; when
    no seed is given anywhere a fresh one is generated and recorded in the
    emitted manifest.
    """
    loaded = _load(path)
    if isinstance(loaded, dict):
        d = loaded.get("plan", loaded)
        if "scenarios" not in d:
            raise ValueError(f"{path}: manifest has no plan with scenarios")
        plan = plan_from_dict(d, out_dir=out_dir, seed=seed)
        return plan
    parser = loaded
    study = "study"
    defaults = {}
    if parser.has_section(study):
        _check_keys(parser, path, study, _STUDY_KEYS)
        defaults["replicates"] = _get_int(parser, path, study, "replicates")
        defaults["master_seed"] = _get_int(parser, path, study, "master_seed")
    scenario_sections = [s for s in parser.sections() if s.startswith("scenario:")]
    if not scenario_sections:
        raise ValueError(f"{path}: no [scenario:ID] sections found")
    auto_seed = fresh_seed()
    defaults = {k: v for k, v in defaults.items() if v is not None}
    scenarios = []
    for section in scenario_sections:
        sid = section.split(":", 1)[1].strip()
        if not sid:
            raise ValueError(f"{path}: [{section}] has an empty scenario id")
        scenarios.append(
            (sid, _parse_scenario_section(parser, path, section, defaults, seed, auto_seed))
        )
    outcome_model = _parse_model(
        parser, path, "outcome_model", "outcome", CONFOUNDER_NAMES, ("c1", "c2")
    )
    propensity_model = _parse_model(
        parser, path, "propensity_model", "propensity", CONFOUNDER_NAMES
    )
    grid = _parse_grid(parser, path)
    kwargs = {}
    if parser.has_section(study):
        name = parser.get(study, "name", fallback=None)
        if name:
            kwargs["name"] = name
        for key, caster in (
            ("bootstrap_replicates", _get_int),
            ("num_draws", _get_int),
            ("oracle_n", _get_int),
            ("bootstrap_level", _get_float),
            ("min_captured_mass", _get_float),
        ):
            value = caster(parser, path, study, key)
            if value is not None:
                kwargs[key] = value
        methods = _get_list(parser, path, study, "methods")
        if methods:
            kwargs["methods"] = methods
    try:
        return StudyPlan(
            scenarios=tuple(scenarios),
            outcome_model=outcome_model,
            propensity_model=propensity_model,
            grid=grid if grid is not None else DensityGrid.default_simulation(),
            out_dir=out_dir,
            **kwargs,
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _scenario_to_dict(sid: str, cfg: ScenarioConfig) -> dict:
    return {
        "id": sid,
        "sigma": cfg.sigma,
        "n": cfg.n,
        "replicates": cfg.replicates,
        "confounding": cfg.confounding_label,
        "coefficients": {
            f.name: list(v) if isinstance(v := getattr(cfg.dgp_coefficients, f.name), tuple) else v
            for f in fields(DgpCoefficients)
        },
    }


def _scenario_from_dict(d: dict, seed: int | None) -> ScenarioConfig:
    coef = d.get("coefficients", {})
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in coef.items()}
    return ScenarioConfig(
        sigma=float(d["sigma"]),
        n=int(d.get("n", 1000)),
        confounding_label=d.get("confounding", "custom"),
        replicates=int(d.get("replicates", 1)),
        master_seed=int(seed if seed is not None else 0),
        dgp_coefficients=DgpCoefficients(**kwargs),
    )


def parse_scenario(path: str, seed: int | None = None) -> ParsedScenario:
    """Read one scenario from an INI file or a truth-command manifest."""
    loaded = _load(path)
    if isinstance(loaded, dict):
        if "scenario" not in loaded:
            raise ValueError(f"{path}: manifest has no scenario")
        manifest_seed = loaded.get("seed")
        resolved = seed if seed is not None else manifest_seed
        d = loaded["scenario"]
        return ParsedScenario(
            scenario_id=str(loaded.get("scenario_id", d.get("id", "scenario"))),
            config=_scenario_from_dict(d, resolved),
            oracle_n=None if loaded.get("oracle_n") is None else int(loaded["oracle_n"]),
            seed=None if resolved is None else int(resolved),
        )
    parser = loaded
    sections = [
        s for s in parser.sections() if s == "scenario" or s.startswith("scenario:")
    ]
    if len(sections) != 1:
        raise ValueError(f"{path}: expected exactly one [scenario] section")
    section = sections[0]
    sid = section.split(":", 1)[1].strip() if ":" in section else "scenario"
    if not sid:
        raise ValueError(f"{path}: [{section}] has an empty scenario id")
    explicit = _get_int(parser, path, section, "master_seed")
    resolved = seed if seed is not None else explicit
    cfg = _parse_scenario_section(
        parser, path, section, {}, resolved, auto_seed=0
    )
    if resolved is None:
        return ParsedScenario(sid, cfg, None, None)
    return ParsedScenario(sid, cfg, None, int(resolved))


def parse_estimate_config(path: str) -> RunConfig:
    """Read analysis settings from an INI file or an estimate manifest."""
    loaded = _load(path)
    if isinstance(loaded, dict):
        if "config" not in loaded:
            raise ValueError(f"{path}: manifest has no config")
        cfg = RunConfig.from_dict(loaded["config"])
        seed = loaded.get("seed", cfg.seed)
        return replace(cfg, seed=None if seed is None else int(seed))
    parser = loaded
    for section in parser.sections():
        if section not in ("data", "estimate", "grid"):
            raise ValueError(f"{path}: unknown section [{section}]")
    kwargs = {}
    if parser.has_section("data"):
        _check_keys(parser, path, "data", _DATA_KEYS)
        kwargs["outcome"] = parser.get("data", "outcome", fallback="y")
        kwargs["exposure"] = parser.get("data", "exposure", fallback="a")
        kwargs["confounders"] = _get_list(parser, path, "data", "confounders")
    if parser.has_section("estimate"):
        allowed = _ESTIMATE_KEYS | {"outcome_interactions"}
        _check_keys(parser, path, "estimate", allowed)
        methods = _get_list(parser, path, "estimate", "methods")
        if methods:
            kwargs["methods"] = methods
        kwargs["outcome_interactions"] = _get_list(
            parser, path, "estimate", "outcome_interactions"
        )
        for key, caster in (
            ("bootstrap_replicates", _get_int),
            ("num_draws", _get_int),
            ("seed", _get_int),
            ("level", _get_float),
            ("min_captured_mass", _get_float),
            ("trim", _get_float),
        ):
            value = caster(parser, path, "estimate", key)
            if value is not None:
                kwargs[key] = value
    grid = _parse_grid(parser, path)
    if grid is not None:
        kwargs["grid"] = grid
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None

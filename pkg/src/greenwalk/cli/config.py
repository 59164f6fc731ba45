"""Scenario configuration: YAML parsing, defaults and validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from ..groups import GroupError, GroupSpec, parse_group
from ..measures import DEFAULT_BUDGET_ATOMS, MeasureError, StepMeasure, parse_measure

DEFAULT_BUDGET_STEPS = 100_000
MAX_SEED = 2**64 - 1

ESTIMATOR_DEFAULTS: dict[str, dict] = {
    "speed": {"metric": "green", "n": [1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000], "trials": 10000},
    "entropy_convolution": {"n_max": 12, "order": 2},
    "entropy_pointwise": {"n": 10, "trials": 10000, "order": 2},
    "boundary_integral": {"samples": 100000, "window": 50},
    "volume_growth": {"metric": "green", "radii": None, "tail_fraction": 0.5},
    "decomposition": {"n": [1, 2, 3, 4, 5, 6, 7, 8], "metric": "word", "speed": None, "eps": None, "K": None},
    "maximal_inequality": {"a": [1.5, 3, 9, 27], "trajectories": 100000, "horizon": 1000},
    "heat_kernel": {"k_max": 200},
}

CHECK_DEFAULTS: dict[str, dict] = {
    "entropy_equals_green_speed": {"absolute_bound": None},
    "green_speed_le_entropy": {},
    "fundamental_inequality": {"metrics": ["word", "green"]},
    "decomposition_identity": {},
    "annulus_mass_bound": {},
    "martin_maximal_inequality": {},
    "green_hitting_proportionality": {"radius": 6, "pairs": 100, "box": 4},
    "green_metric_axioms": {"triples": 10000, "radius": 8},
    "green_zero_set": {"radius": 6, "span": 20},
    "green_first_moment_le_entropy": {},
    "green_growth_bound": {"lower": None, "upper": None},
    "heat_kernel_decay": {"exponent": None, "tolerance": 0.1},
}

CONFIG_DEFAULTS: dict = {
    "name": "custom",
    "description": "",
    "group": None,
    "measure": "srw",
    "seed": 0,
    "oracle": {"method": None},
    "budgets": {"atoms": DEFAULT_BUDGET_ATOMS, "steps": DEFAULT_BUDGET_STEPS},
    "estimators": [],
    "checks": [],
    "output": None,
}


class ConfigError(ValueError):
    """The configuration cannot be used; reported with a distinct exit code."""


@dataclass
class EstimatorSpec:
    name: str
    kind: str
    params: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, **self.params}


@dataclass
class CheckSpec:
    name: str
    params: dict

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


@dataclass
class ScenarioConfig:
    name: str
    description: str
    group: GroupSpec
    measure: StepMeasure
    measure_text: str
    seed: int
    oracle: dict
    budgets: dict
    estimators: list[EstimatorSpec]
    checks: list[CheckSpec]
    output: str | None

    def to_dict(self) -> dict:
        """Effective configuration with every default filled in."""
        return {
            "name": self.name,
            "description": self.description,
            "group": self.group.name,
            "measure": self.measure_text,
            "seed": self.seed,
            "oracle": dict(self.oracle),
            "budgets": dict(self.budgets),
            "estimators": [e.to_dict() for e in self.estimators],
            "checks": [c.to_dict() for c in self.checks],
        }


def defaults_document() -> dict:
    """Every default, as printed by ``show-defaults``."""
    return {
        "scenario": {k: copy.deepcopy(v) for k, v in CONFIG_DEFAULTS.items() if k not in ("estimators", "checks")},
        "estimators": copy.deepcopy(ESTIMATOR_DEFAULTS),
        "checks": copy.deepcopy(CHECK_DEFAULTS),
    }


def _merge(kind: str, given: dict, defaults: dict, what: str) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"{what} {kind!r}: unknown parameter(s) {sorted(unknown)}")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def _estimator(entry, index: int) -> EstimatorSpec:
    if isinstance(entry, str):
        entry = {"kind": entry}
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(f"estimator #{index} needs a 'kind'")
    entry = dict(entry)
    kind = entry.pop("kind")
    if kind not in ESTIMATOR_DEFAULTS:
        raise ConfigError(f"unknown estimator kind {kind!r}; known: {sorted(ESTIMATOR_DEFAULTS)}")
    name = entry.pop("name", None)
    params = _merge(kind, entry, ESTIMATOR_DEFAULTS[kind], "estimator")
    if name is None:
        name = f"{kind}_{params['metric']}" if "metric" in params else kind
    if not isinstance(name, str) or not name:
        raise ConfigError(f"estimator #{index} has a bad name")
    if params.get("metric", "word") not in ("word", "green"):
        raise ConfigError(f"estimator {name!r}: metric must be 'word' or 'green'")
    return EstimatorSpec(name, kind, params)


def _check(entry, index: int) -> CheckSpec:
    if isinstance(entry, str):
        entry = {"name": entry}
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(f"check #{index} needs a 'name'")
    entry = dict(entry)
    name = entry.pop("name")
    if name not in CHECK_DEFAULTS:
        raise ConfigError(f"unknown check {name!r}; known: {sorted(CHECK_DEFAULTS)}")
    return CheckSpec(name, _merge(name, entry, CHECK_DEFAULTS[name], "check"))


def parse_config(doc) -> ScenarioConfig:
    """Validate a parsed YAML document; every problem raises :class:`ConfigError`."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(doc) - set(CONFIG_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {sorted(unknown)}")
    cfg = copy.deepcopy(CONFIG_DEFAULTS)
    cfg.update(doc)
    if cfg["group"] is None:
        raise ConfigError("'group' is required")
    try:
        g = parse_group(str(cfg["group"]))
        m = parse_measure(str(cfg["measure"]), g)
    except (GroupError, MeasureError) as exc:
        raise ConfigError(str(exc)) from exc
    seed = cfg["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    budgets = _merge("budgets", dict(cfg["budgets"] or {}), CONFIG_DEFAULTS["budgets"], "section")
    for k, v in budgets.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"budget {k!r} must be a positive integer")
    oracle = dict(cfg["oracle"] or {})
    if "method" not in oracle:
        oracle["method"] = None
    ests = [_estimator(e, i) for i, e in enumerate(cfg["estimators"] or [])]
    names = [e.name for e in ests]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise ConfigError(f"duplicate estimator name(s) {sorted(dup)}")
    checks = [_check(c, i) for i, c in enumerate(cfg["checks"] or [])]
    return ScenarioConfig(
        name=str(cfg["name"]),
        description=str(cfg["description"] or ""),
        group=g,
        measure=m,
        measure_text=str(cfg["measure"]),
        seed=seed,
        oracle=oracle,
        budgets=budgets,
        estimators=ests,
        checks=checks,
        output=cfg["output"],
    )


def load_text(text: str) -> ScenarioConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}") from exc
    return parse_config(doc)


# -- bundled scenarios -----------------------------------------------------------


def _scenario_dir():
    return resources.files("greenwalk.cli").joinpath("scenarios")


def bundled_scenarios() -> dict[str, str]:
    """``name -> YAML text`` for every bundled scenario, sorted by name."""
    out = {}
    for entry in _scenario_dir().iterdir():
        if entry.name.endswith(".yaml"):
            out[entry.name[: -len(".yaml")]] = entry.read_text(encoding="utf-8")
    return dict(sorted(out.items()))


def list_scenarios(filter_text: str = "") -> list[tuple[str, str]]:
    """``(name, description)`` of bundled scenarios whose name contains ``filter_text``."""
    rows = []
    for name, text in bundled_scenarios().items():
        if filter_text in name:
            doc = yaml.safe_load(text) or {}
            rows.append((name, str(doc.get("description", "")).strip()))
    return rows


def load_config(ref: str) -> ScenarioConfig:
    """Load a config file path, or a bundled scenario by name."""
    p = Path(ref)
    if p.is_file():
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
        return load_text(text)
    scenarios = bundled_scenarios()
    if ref in scenarios:
        return load_text(scenarios[ref])
    raise ConfigError(f"no config file or bundled scenario named {ref!r}")

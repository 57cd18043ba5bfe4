"""Run configuration: YAML files, named presets, strict validation.

A configuration file is a nested key/value document; unknown keys are
rejected with their full path so typos surface immediately. Two presets
are compiled in: ``stepanova-table1`` (published parameters, one combined
scenario) and ``reproduce-paper`` (the four treatment figures: untreated,
chemotherapy only, immunotherapy only, combined).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import yaml

from .fuzzy import CONTROL_DOMAIN_BOUNDS, DEFAULT_DOMAIN_BOUNDS, DEFAULT_T, Domain
from .model import PARAM_PRESETS, ModelParams, State
from .sim import DEFAULT_CAPS, DEFAULT_WINDUP, EPS_DEN, Scenario
from .synthesis import SynthesisOptions


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_PARAM_FIELDS = ("mu_c", "mu_I", "gamma", "beta", "delta", "alpha",
                 "x_inf", "k_x1", "k_x2")
_DOMAIN_FIELDS = ("x1_min", "x1_max", "x2_min", "x2_max")
_LP_FIELDS = ("eps", "q_max", "enforce_8c", "positivity_rows", "gain_pins")
_SIM_FIELDS = ("dose_caps", "eps_den", "windup")
_SCENARIO_FIELDS = ("name", "therapy", "x0", "z_r", "duration",
                    "controller_period", "plant")
_TOP_FIELDS = ("params", "domain", "control_domain", "mode", "T", "lp",
               "sim", "scenarios", "out_dir", "timestamp")


def _default_scenario(name: str, therapy: str) -> dict:
    return {"name": name, "therapy": therapy, "x0": [600.0, 0.1],
            "z_r": [50.0, 1.6], "duration": 60.0,
            "controller_period": DEFAULT_T, "plant": "continuous-rk4"}


def _base_config() -> dict:
    return {
        "params": "stepanova-table1",
        "domain": dict(zip(_DOMAIN_FIELDS, DEFAULT_DOMAIN_BOUNDS)),
        "control_domain": dict(zip(_DOMAIN_FIELDS, CONTROL_DOMAIN_BOUNDS)),
        "mode": "endpoint",
        "T": DEFAULT_T,
        "lp": {"eps": 1e-6, "q_max": 1e6, "enforce_8c": False,
               "positivity_rows": "plant", "gain_pins": "default"},
        "sim": {"dose_caps": list(DEFAULT_CAPS), "eps_den": EPS_DEN,
                "windup": list(DEFAULT_WINDUP)},
        "scenarios": [_default_scenario("combined", "combined")],
        "out_dir": "out",
        "timestamp": True,
    }


def _reproduce_paper_config() -> dict:
    cfg = _base_config()
    cfg["scenarios"] = [
        _default_scenario("fig1-none", "none"),
        _default_scenario("fig3-chemo-only", "chemo-only"),
        _default_scenario("fig4-immuno-only", "immuno-only"),
        _default_scenario("fig5-combined", "combined"),
    ]
    return cfg


CONFIG_PRESETS = {
    "stepanova-table1": _base_config,
    "reproduce-paper": _reproduce_paper_config,
}


@dataclass
class RunConfig:
    """Validated, resolved configuration for one CLI invocation."""

    params: ModelParams
    domain: Domain
    control_domain: Domain
    mode: str
    T: float
    lp: SynthesisOptions
    dose_caps: tuple[float, float]
    eps_den: float
    windup: tuple[float, float]
    scenarios: list[Scenario]
    out_dir: str
    timestamp: bool
    raw: dict = field(repr=False, default_factory=dict)


def _check_keys(section: Mapping, allowed, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(
                f"unknown key '{path}{key}' (allowed: {', '.join(allowed)})")


def _deep_merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value) if isinstance(value, (dict, list)) else value
    return out


def _parse_params(node, path: str) -> ModelParams:
    if isinstance(node, str):
        if node not in PARAM_PRESETS:
            raise ConfigError(
                f"{path}: unknown parameter preset {node!r} "
                f"(available: {', '.join(PARAM_PRESETS)})")
        return PARAM_PRESETS[node]
    if not isinstance(node, Mapping):
        raise ConfigError(f"{path}: expected a preset name or a mapping")
    _check_keys(node, _PARAM_FIELDS, path + ".")
    missing = [f for f in _PARAM_FIELDS if f not in node]
    if missing:
        raise ConfigError(f"{path}: missing fields {missing}")
    try:
        return ModelParams(**{f: float(node[f]) for f in _PARAM_FIELDS})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_domain(node, path: str) -> Domain:
    if not isinstance(node, Mapping):
        raise ConfigError(f"{path}: expected a mapping")
    _check_keys(node, _DOMAIN_FIELDS, path + ".")
    try:
        return Domain(**{f: float(node[f]) for f in _DOMAIN_FIELDS})
    except KeyError as exc:
        raise ConfigError(f"{path}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_pins(node, path: str):
    if node is None or node == "none":
        return None
    if node == "default":
        return "default"
    if isinstance(node, Mapping):
        pins = {}
        for key, val in node.items():
            try:
                z, t = (int(part) for part in str(key).split(","))
                pins[(z, t)] = float(val)
            except (TypeError, ValueError) as exc:
                raise ConfigError(
                    f"{path}.{key}: pin keys are 'row,col' strings and values "
                    f"numbers ({exc})") from exc
        return pins
    raise ConfigError(f"{path}: expected 'default', 'none' or a mapping")


def _parse_lp(node, path: str) -> SynthesisOptions:
    if not isinstance(node, Mapping):
        raise ConfigError(f"{path}: expected a mapping")
    _check_keys(node, _LP_FIELDS, path + ".")
    rows = node.get("positivity_rows", "plant")
    if isinstance(rows, list):
        rows = tuple(int(r) for r in rows)
    elif rows not in ("plant", "all"):
        raise ConfigError(f"{path}.positivity_rows: expected 'plant', 'all' or a list")
    try:
        return SynthesisOptions(
            eps=float(node.get("eps", 1e-6)),
            q_max=float(node.get("q_max", 1e6)),
            enforce_8c=bool(node.get("enforce_8c", False)),
            positivity_rows=rows,
            gain_pins=_parse_pins(node.get("gain_pins", "default"), path + ".gain_pins"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_pair(node, path: str) -> tuple[float, float]:
    if not isinstance(node, (list, tuple)) or len(node) != 2:
        raise ConfigError(f"{path}: expected a two-element list")
    return float(node[0]), float(node[1])


def _parse_scenario(node, index: int) -> Scenario:
    path = f"scenarios[{index}]"
    if not isinstance(node, Mapping):
        raise ConfigError(f"{path}: expected a mapping")
    _check_keys(node, _SCENARIO_FIELDS, path + ".")
    try:
        x0 = _parse_pair(node.get("x0", [600.0, 0.1]), path + ".x0")
        z_r = _parse_pair(node.get("z_r", [50.0, 1.6]), path + ".z_r")
        return Scenario(
            therapy=node["therapy"],
            x0=State(*x0),
            z_r=z_r,
            duration=float(node.get("duration", 60.0)),
            controller_period=float(node.get("controller_period", DEFAULT_T)),
            plant=node.get("plant", "continuous-rk4"),
            name=node.get("name", node["therapy"]),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def resolve_config(data: Mapping) -> RunConfig:
    """Validate a raw configuration mapping and build the typed objects."""
    if not isinstance(data, Mapping):
        raise ConfigError("configuration root must be a mapping")
    _check_keys(data, _TOP_FIELDS, "")
    mode = data.get("mode", "endpoint")
    if mode not in ("endpoint", "global"):
        raise ConfigError(f"mode: expected 'endpoint' or 'global', got {mode!r}")
    try:
        T = float(data.get("T", DEFAULT_T))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"T: {exc}") from exc
    if T <= 0.0:
        raise ConfigError(f"T: sampling period must be positive, got {T!r}")
    sim_node = data.get("sim", {})
    if not isinstance(sim_node, Mapping):
        raise ConfigError("sim: expected a mapping")
    _check_keys(sim_node, _SIM_FIELDS, "sim.")
    scenarios_node = data.get("scenarios", [])
    if not isinstance(scenarios_node, list):
        raise ConfigError("scenarios: expected a list")
    scenarios = [_parse_scenario(s, i) for i, s in enumerate(scenarios_node)]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError(f"scenarios: names must be unique, got {names}")
    return RunConfig(
        params=_parse_params(data.get("params", "stepanova-table1"), "params"),
        domain=_parse_domain(data.get("domain", dict(zip(_DOMAIN_FIELDS, DEFAULT_DOMAIN_BOUNDS))), "domain"),
        control_domain=_parse_domain(
            data.get("control_domain", dict(zip(_DOMAIN_FIELDS, CONTROL_DOMAIN_BOUNDS))),
            "control_domain"),
        mode=mode,
        T=T,
        lp=_parse_lp(data.get("lp", {}), "lp"),
        dose_caps=_parse_pair(sim_node.get("dose_caps", list(DEFAULT_CAPS)), "sim.dose_caps"),
        eps_den=float(sim_node.get("eps_den", EPS_DEN)),
        windup=_parse_pair(sim_node.get("windup", list(DEFAULT_WINDUP)), "sim.windup"),
        scenarios=scenarios,
        out_dir=str(data.get("out_dir", "out")),
        timestamp=bool(data.get("timestamp", True)),
        raw=dict(data),
    )


def load_config(path: Optional[str] = None, preset: Optional[str] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Assemble the effective configuration: preset defaults, then the
    config file, then explicit overrides (CLI flags)."""
    preset = preset or "stepanova-table1"
    if preset not in CONFIG_PRESETS:
        raise ConfigError(
            f"unknown preset {preset!r} (available: {', '.join(CONFIG_PRESETS)})")
    data = CONFIG_PRESETS[preset]()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path!r}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, Mapping):
            raise ConfigError(f"config file {path!r} must contain a mapping")
        data = _deep_merge(data, loaded)
    if overrides:
        data = _deep_merge(data, overrides)
    return resolve_config(data)


def params_to_dict(params: ModelParams) -> dict:
    return {f: getattr(params, f) for f in _PARAM_FIELDS}


def domain_to_dict(domain: Domain) -> dict:
    return {f: getattr(domain, f) for f in _DOMAIN_FIELDS}

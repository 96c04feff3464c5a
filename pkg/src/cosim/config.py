"""Run configuration: JSON schema, defaults, validation and scenario assembly.

A run config is a single JSON object selecting a built-in scenario and
optionally overriding its parameters, mode, estimator, indicator and
controller settings.  Unknown keys are rejected at every nesting level.
The fully resolved (defaults-merged) config is what gets echoed next to
every CSV so runs are reproducible from their artifacts.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import scenarios
from .controller import ControllerConfig
from .core import SignalVector
from .errors import ConfigurationError
from .estimators import (
    EccoEstimator,
    Estimator,
    FeedthroughModel,
    NepceEstimator,
    PredictorEstimator,
    default_error_order,
)
from .indicator import AggregationKind, ToleranceSet, scaled_tolerances
from .master import Scenario
from .subsystems import MonolithicModel

SCHEMA_VERSION = 1

BUILTIN_SCENARIOS = ("mass_spring", "mass_spring_damped", "quarter_car")

_ESTIMATOR_KINDS = ("nepce", "predictor", "ecco")

_BASE_DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "scenario": None,
    "mode": "fixed",
    "t_start": 0.0,
    "t_stop": 5.0,
    "dt": 0.05,
    "micro_dt": 1e-4,
    "parameters": {},
    "estimator": {
        "kind": "nepce",
        "use_feedthrough": False,
        "order": 1,
        "m": 0,
    },
    "indicator": {
        "aggregation": "rmse",
        "relative_tolerance": 2e-3,
        "typical_magnitudes": None,
        "absolute_tolerances": None,
        "relative_tolerances": None,
    },
    "controller": {
        "order": None,
        "kp": None,
        "ki": None,
        "dt_min": 1e-4,
        "dt_max": 1e-2,
        "theta_min": 0.2,
        "theta_max": 1.5,
        "safety_factor": 1.0,
        "dt_start": None,
    },
    "seed": 0,
    "output": None,
}

_SCENARIO_DEFAULTS: dict[str, dict[str, Any]] = {
    "mass_spring": {
        "mode": "fixed",
        "t_stop": 5.0,
        "dt": 0.05,
        "parameters": {"m": 100.0, "k": 1e3, "d": 0.0, "x0": 1.0, "v0": 0.0},
    },
    "mass_spring_damped": {
        "mode": "fixed",
        "t_stop": 5.0,
        "dt": 0.05,
        "parameters": {"m": 100.0, "k": 1e3, "d": 40.0, "x0": 1.0, "v0": 0.0},
    },
    "quarter_car": {
        "mode": "adaptive",
        "t_stop": 4.0,
        "dt": 1e-3,
        "parameters": {
            "m_c": 400.0, "m_w": 40.0, "k_c": 1.5e4, "k_w": 1.5e5,
            "d_c": 1e3, "z_c0": 0.1,
        },
    },
}

# Typical signal magnitudes used to build default tolerances, per scenario
# and per estimator kind (inputs for nepce, outputs for predictor; the ecco
# entry is an absolute energy tolerance in joules).
_TYPICAL_MAGNITUDES: dict[str, dict[str, list[float]]] = {
    "mass_spring": {"nepce": [1e3, 3.2], "predictor": [3.2, 1e3], "ecco": [1.0]},
    "mass_spring_damped": {"nepce": [1e3, 3.2], "predictor": [3.2, 1e3], "ecco": [1.0]},
    "quarter_car": {"nepce": [1e3, 0.3], "predictor": [0.3, 1e3], "ecco": [1.0]},
}


def _merge(defaults: dict, override: dict, path: str = "") -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in defaults:
            raise ConfigurationError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {where!r} must be an object")
            merged[key] = _merge(defaults[key], value, where + ".")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _require_number(cfg: dict, key: str, positive: bool = False,
                    non_negative: bool = False, where: str = "") -> float:
    value = cfg.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigurationError(f"{where}{key} must be a number, got {value!r}")
    if positive and value <= 0:
        raise ConfigurationError(f"{where}{key} must be positive, got {value}")
    if non_negative and value < 0:
        raise ConfigurationError(f"{where}{key} must be non-negative, got {value}")
    return float(value)


_POSITIVE_PARAMS = {
    "mass_spring": ("m", "k"),
    "mass_spring_damped": ("m", "k"),
    "quarter_car": ("m_c", "m_w", "k_c", "k_w", "d_c"),
}
_NON_NEGATIVE_PARAMS = {
    "mass_spring": ("d",),
    "mass_spring_damped": ("d",),
    "quarter_car": (),
}


def load_config(path: str | Path) -> dict:
    """Parse a JSON run config file (no defaults applied yet)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("run config must be a JSON object")
    return raw


def effective_config(raw: dict) -> dict:
    """Merge a raw config over the built-in defaults and validate it."""
    scenario_name = raw.get("scenario")
    if scenario_name not in BUILTIN_SCENARIOS:
        raise ConfigurationError(
            f"scenario must be one of {BUILTIN_SCENARIOS}, got {scenario_name!r}"
        )
    defaults = copy.deepcopy(_BASE_DEFAULTS)
    for key, value in _SCENARIO_DEFAULTS[scenario_name].items():
        defaults[key] = copy.deepcopy(value)
    defaults["scenario"] = scenario_name
    cfg = _merge(defaults, raw)

    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(
            f"schema_version must be {SCHEMA_VERSION}, got {cfg['schema_version']!r}"
        )
    if cfg["mode"] not in ("fixed", "adaptive"):
        raise ConfigurationError(f"mode must be 'fixed' or 'adaptive', got {cfg['mode']!r}")
    t_start = _require_number(cfg, "t_start")
    t_stop = _require_number(cfg, "t_stop")
    if t_stop < t_start:
        raise ConfigurationError(
            f"t_stop ({t_stop}) must not precede t_start ({t_start})"
        )
    _require_number(cfg, "dt", positive=True)
    _require_number(cfg, "micro_dt", positive=True)
    params = cfg["parameters"]
    for name in _POSITIVE_PARAMS[scenario_name]:
        _require_number(params, name, positive=True, where="parameters.")
    for name in _NON_NEGATIVE_PARAMS[scenario_name]:
        _require_number(params, name, non_negative=True, where="parameters.")

    est = cfg["estimator"]
    if est["kind"] not in _ESTIMATOR_KINDS:
        raise ConfigurationError(
            f"estimator.kind must be one of {_ESTIMATOR_KINDS}, got {est['kind']!r}"
        )
    if not isinstance(est["use_feedthrough"], bool):
        raise ConfigurationError("estimator.use_feedthrough must be a boolean")
    if int(est["order"]) < 1:
        raise ConfigurationError(f"estimator.order must be >= 1, got {est['order']}")
    if int(est["m"]) < 0:
        raise ConfigurationError(f"estimator.m must be >= 0, got {est['m']}")

    ind = cfg["indicator"]
    if ind["aggregation"] not in ("rmse", "mae", "max"):
        raise ConfigurationError(
            f"indicator.aggregation must be rmse, mae or max, got {ind['aggregation']!r}"
        )
    explicit = ind["absolute_tolerances"] is not None or ind["relative_tolerances"] is not None
    if explicit:
        if ind["absolute_tolerances"] is None or ind["relative_tolerances"] is None:
            raise ConfigurationError(
                "indicator.absolute_tolerances and indicator.relative_tolerances "
                "must be given together"
            )
    elif ind["typical_magnitudes"] is None:
        ind["typical_magnitudes"] = list(_TYPICAL_MAGNITUDES[scenario_name][est["kind"]])
        if est["kind"] == "ecco":
            # default: absolute energy tolerance only
            ind["absolute_tolerances"] = ind.pop("typical_magnitudes")
            ind["typical_magnitudes"] = None
            ind["relative_tolerances"] = [0.0] * len(ind["absolute_tolerances"])
    if ind["typical_magnitudes"] is not None:
        _require_number(ind, "relative_tolerance", positive=True, where="indicator.")

    ctrl = cfg["controller"]
    if ctrl["order"] is None:
        ctrl["order"] = default_error_order(
            est["kind"], m=int(est["m"]),
            feedthrough_present=bool(est["use_feedthrough"]),
        )
    build_controller(cfg)  # validates gains and clamps

    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigurationError(f"seed must be an integer, got {cfg['seed']!r}")
    if cfg["output"] is not None and not isinstance(cfg["output"], str):
        raise ConfigurationError("output must be a string path")
    return cfg


def build_controller(cfg: dict) -> ControllerConfig:
    ctrl = cfg["controller"]
    return ControllerConfig(
        order=int(ctrl["order"]),
        kp=ctrl["kp"],
        ki=ctrl["ki"],
        dt_min=float(ctrl["dt_min"]),
        dt_max=float(ctrl["dt_max"]),
        theta_min=float(ctrl["theta_min"]),
        theta_max=float(ctrl["theta_max"]),
        safety_factor=float(ctrl["safety_factor"]),
        dt_start=None if ctrl["dt_start"] is None else float(ctrl["dt_start"]),
    )


def _build_parts(cfg: dict):
    name = cfg["scenario"]
    params = cfg["parameters"]
    micro_dt = float(cfg["micro_dt"])
    if name in ("mass_spring", "mass_spring_damped"):
        p = scenarios.OscillatorParams(
            m=params["m"], k=params["k"], d=params["d"],
            x0=params["x0"], v0=params["v0"], micro_dt=micro_dt,
        )
        subs = scenarios.oscillator_subsystems(p)
        return subs, scenarios.oscillator_graph(), (scenarios.oscillator_bond(),), p
    p = scenarios.QuarterCarParams(
        m_c=params["m_c"], m_w=params["m_w"], k_c=params["k_c"],
        k_w=params["k_w"], d_c=params["d_c"], z_c0=params["z_c0"],
        micro_dt=micro_dt,
    )
    subs = scenarios.quarter_car_subsystems(p)
    return subs, scenarios.quarter_car_graph(), (scenarios.quarter_car_bond(),), p


def _build_estimator(cfg: dict, subs, graph, bonds) -> Estimator:
    est = cfg["estimator"]
    if est["kind"] == "nepce":
        feedthrough = None
        if est["use_feedthrough"]:
            entries: dict[tuple[int, int], float] = {}
            out_off = in_off = 0
            for sub in subs:
                for (i, j), value in sub.feedthrough().items():
                    entries[(out_off + i, in_off + j)] = value
                out_off += sub.n_outputs
                in_off += sub.n_inputs
            feedthrough = FeedthroughModel(entries, graph.n_outputs, graph.n_inputs)
        return NepceEstimator(graph, feedthrough)
    if est["kind"] == "predictor":
        n_outputs = sum(sub.n_outputs for sub in subs)
        return PredictorEstimator(n_outputs, order=int(est["order"]))
    return EccoEstimator(len(bonds), m=int(est["m"]))


def _build_tolerances(cfg: dict) -> ToleranceSet:
    ind = cfg["indicator"]
    if ind["typical_magnitudes"] is not None:
        return scaled_tolerances(
            float(ind["relative_tolerance"]),
            [float(v) for v in ind["typical_magnitudes"]],
        )
    return ToleranceSet(
        tuple(float(v) for v in ind["absolute_tolerances"]),
        tuple(float(v) for v in ind["relative_tolerances"]),
    )


def build_scenario(cfg: dict, *, dt: float | None = None,
                   mode: str | None = None) -> Scenario:
    """Assemble a runnable scenario (fresh subsystem instances) from a config.

    ``dt`` and ``mode`` override the config values; sweeps use this to force
    fixed-step runs at varying step sizes.
    """
    subs, graph, bonds, _ = _build_parts(cfg)
    estimator = _build_estimator(cfg, subs, graph, bonds)
    tolerances = _build_tolerances(cfg)
    return Scenario(
        subsystems=tuple(subs),
        graph=graph,
        bonds=bonds,
        t_start=float(cfg["t_start"]),
        t_stop=float(cfg["t_stop"]),
        mode=mode if mode is not None else cfg["mode"],
        dt=float(dt if dt is not None else cfg["dt"]),
        controller=build_controller(cfg),
        estimator=estimator,
        tolerances=tolerances,
        aggregation=AggregationKind(cfg["indicator"]["aggregation"]),
    )


def build_monolithic(cfg: dict) -> MonolithicModel:
    """The monolithic reference model matching a config's scenario."""
    _, _, _, params = _build_parts(cfg)
    if isinstance(params, scenarios.OscillatorParams):
        return scenarios.oscillator_monolithic(params)
    return scenarios.quarter_car_monolithic(params)


def write_effective_config(cfg: dict, path: Path) -> None:
    """Echo the defaults-merged config next to the CSV for reproducibility."""
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")

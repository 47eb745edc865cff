"""Scenario configuration: JSON schema, unit conversion and model builders.

Every physical quantity is written as ``{"value": x, "unit": u}``:

* rates and frequencies: ``ratio`` (multiples of the base rate) or
  ``MHz-angular`` (divided by the base rate, also in MHz);
* times: ``ratio`` (units of the inverse base rate) or ``ns``
  (``t * 1e-3 * 2 pi * base``);
* angles: ``rad``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from .ensemble import EnsembleSpec
from .errors import ConfigurationError
from .network import NetworkParams
from .node import NodeParams
from .pulses import PulseSchedule, network_schedule, stirap_schedule

SCENARIOS = ("swap", "swap-constant-chirp", "network-nv", "network-er", "sweep", "calibrate")

RATE_UNITS = ("ratio", "MHz-angular")
TIME_UNITS = ("ratio", "ns")


def _quantity(units):
    return {
        "type": "object",
        "properties": {"value": {"type": "number"}, "unit": {"enum": list(units)}},
        "required": ["value", "unit"],
        "additionalProperties": False,
    }


RATE = _quantity(RATE_UNITS)
TIME = _quantity(TIME_UNITS)
ANGLE = _quantity(("rad",))
NUMBER = {"type": "number"}

ENSEMBLE_SCHEMA = {
    "type": "object",
    "properties": {
        "groups": {"type": "integer", "minimum": 1},
        "sigma_detuning": RATE,
        "sigma_phase": ANGLE,
        "mode": {"enum": ["stratified", "random"]},
        "coupling_spread": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

NODE_PROPS = {
    "gamma1_qb": RATE, "gamma2_qb": RATE, "kappa": RATE, "xi": {"type": "number"},
    "spin_decay": RATE, "spin_dephasing": RATE, "delta0": RATE, "delta1": RATE,
    "dbar": RATE, "delta_q": RATE, "gc": RATE, "omega_c0": RATE, "g_f": RATE,
    "coupling": RATE, "ensemble": ENSEMBLE_SCHEMA,
}
NODE_SCHEMA = {"type": "object", "properties": NODE_PROPS, "additionalProperties": False}

PULSE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "stirap"},
                "width_optical": TIME, "width_qubit": TIME,
                "delay_factor": NUMBER, "center_factor": NUMBER, "stop_factor": NUMBER,
                "qubit_peak": NUMBER,
                "chirp_mode": {"enum": ["tracking", "constant", "zero"]},
            },
            "required": ["kind", "width_optical", "width_qubit"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "sech"},
                "width": TIME, "center": TIME, "stop": TIME,
            },
            "required": ["kind", "width", "center", "stop"],
            "additionalProperties": False,
        },
    ]
}

AXIS_SCHEMA = {
    "type": "object",
    "properties": {
        "start": NUMBER, "stop": NUMBER,
        "num": {"type": "integer", "minimum": 1},
        "unit": {"enum": list(RATE_UNITS)},
    },
    "required": ["start", "stop", "num", "unit"],
    "additionalProperties": False,
}

BOUND = {"type": "array", "items": NUMBER, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "properties": {
        "scenario": {"enum": list(SCENARIOS)},
        "base_rate": {
            "type": "object",
            "properties": {"label": {"type": "string"}, "value": {"type": "number", "exclusiveMinimum": 0},
                           "unit": {"const": "MHz-angular"}},
            "required": ["label", "value", "unit"],
            "additionalProperties": False,
        },
        "node": NODE_SCHEMA,
        "network": {
            "type": "object",
            "properties": {
                "dispersive_detuning": RATE,
                "node_b": NODE_SCHEMA,
                "kappa_ex_a": RATE, "kappa_ex_b": RATE,
            },
            "required": ["dispersive_detuning"],
            "additionalProperties": False,
        },
        "pulse": PULSE_SCHEMA,
        "integrator": {
            "type": "object",
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                "samples": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "wigner_time": {"oneOf": [TIME, {"const": "peak"}, {"type": "null"}]},
                "wigner_half_width": {"type": "number", "exclusiveMinimum": 0},
                "wigner_points": {"type": "integer", "minimum": 2},
                "svg": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "kappa": AXIS_SCHEMA,
                "coupling": AXIS_SCHEMA,
                "threshold": NUMBER,
                "region": {
                    "type": "object",
                    "properties": {"kappa_max": RATE, "coupling_min": RATE},
                    "required": ["kappa_max", "coupling_min"],
                    "additionalProperties": False,
                },
                "pulse_policy": {"enum": ["fixed", "optimize"]},
                "width_bounds": {"type": "array", "items": TIME, "minItems": 2, "maxItems": 2},
                "delay_bounds": BOUND,
                "max_evaluations": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 2},
            },
            "required": ["kappa", "coupling"],
            "additionalProperties": False,
        },
        "calibrate": {
            "type": "object",
            "properties": {
                "target": {"enum": ["network-nv", "network-er"]},
                "width": {"type": "array", "items": TIME, "minItems": 2, "maxItems": 2},
                "center": {"type": "array", "items": TIME, "minItems": 2, "maxItems": 2},
                "gc": {"type": "array", "items": RATE, "minItems": 2, "maxItems": 2},
                "delta_q": {"type": "array", "items": RATE, "minItems": 2, "maxItems": 2},
                "max_evaluations": {"type": "integer", "minimum": 1},
                "xatol": {"type": "number", "exclusiveMinimum": 0},
                "fatol": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["width", "center"],
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
    "required": ["scenario", "node", "pulse"],
    "additionalProperties": False,
}

DEFAULTS: dict[str, Any] = {
    "integrator": {"rel_tol": 1e-8, "abs_tol": 1e-10, "samples": 2001},
    "output": {"wigner_time": None, "wigner_half_width": 3.0, "wigner_points": 201, "svg": False},
    "seed": 0,
}

SWEEP_DEFAULTS: dict[str, Any] = {
    "threshold": 0.81,
    "pulse_policy": "optimize",
    "delay_bounds": [0.5, 2.0],
    "max_evaluations": 40,
    "samples": 401,
}

CALIBRATE_DEFAULTS: dict[str, Any] = {"max_evaluations": 60, "xatol": 1e-3, "fatol": 1e-5}

NETWORK_SCENARIOS = ("network-nv", "network-er", "calibrate")


def _format_path(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def validate(raw: dict) -> None:
    """Raise :class:`ConfigurationError` naming the offending field on schema violations."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            # oneOf failures are clearer through their best sub-error
            best = jsonschema.exceptions.best_match([e]) if e.context else e
            lines.append(f"{_format_path(best.absolute_path)}: {best.message}")
        raise ConfigurationError("invalid config:\n  " + "\n  ".join(lines))
    scen = raw["scenario"]
    if scen in NETWORK_SCENARIOS and "network" not in raw:
        raise ConfigurationError(f"network: required for scenario {scen!r}")
    if scen == "sweep" and "sweep" not in raw:
        raise ConfigurationError("sweep: required for scenario 'sweep'")
    if scen == "calibrate" and "calibrate" not in raw:
        raise ConfigurationError("calibrate: required for scenario 'calibrate'")
    network = scen in NETWORK_SCENARIOS
    if network != (raw["pulse"]["kind"] == "sech"):
        raise ConfigurationError(f"pulse/kind: scenario {scen!r} needs a "
                                 f"{'sech' if network else 'stirap'} pulse")
    for where, node in (("node", raw["node"]), ("network/node_b", raw.get("network", {}).get("node_b"))):
        if node and "coupling" in node and ("g_f" in node or "gc" in node):
            raise ConfigurationError(f"{where}: give either coupling or g_f/gc, not both")


def resolve(raw: dict) -> dict:
    """Validated config with every default filled in."""
    validate(raw)
    cfg = copy.deepcopy(raw)
    for key, value in DEFAULTS.items():
        if isinstance(value, dict):
            cfg[key] = {**value, **cfg.get(key, {})}
        else:
            cfg.setdefault(key, value)
    if "sweep" in cfg:
        cfg["sweep"] = {**SWEEP_DEFAULTS, **cfg["sweep"]}
    if "calibrate" in cfg:
        cfg["calibrate"] = {**CALIBRATE_DEFAULTS, "target": "network-nv", **cfg["calibrate"]}
    return cfg


def shipped_config(name: str) -> Path:
    """Path of a config shipped with the package (``swap``, ``network-nv`` ...)."""
    path = Path(__file__).with_name("configs") / f"{name}.json"
    if not path.is_file():
        raise ConfigurationError(f"no shipped config named {name!r}; choose from {', '.join(SCENARIOS)}")
    return path


def load_config(path: str | Path) -> dict:
    """Read a config or an emitted run manifest and return the resolved config.

    A bare scenario name that is not an existing file selects the shipped config.
    """
    path = Path(path)
    if not path.exists() and str(path) in SCENARIOS:
        path = shipped_config(str(path))
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if isinstance(raw, dict) and "manifest_version" in raw:
        raw = raw.get("config")
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return resolve(raw)


@dataclass(frozen=True)
class Units:
    """Converts tagged quantities to base-rate ratios."""

    base_mhz: float | None

    @classmethod
    def from_config(cls, cfg: dict) -> "Units":
        base = cfg.get("base_rate")
        return cls(None if base is None else float(base["value"]))

    def _need_base(self, unit: str) -> float:
        if self.base_mhz is None:
            raise ConfigurationError(f"unit {unit!r} needs a base_rate block")
        return self.base_mhz

    def rate(self, q: dict | None, default: float = 0.0) -> float:
        if q is None:
            return default
        if q["unit"] not in RATE_UNITS:
            raise ConfigurationError(f"{q['unit']!r} is not a rate unit")
        if q["unit"] == "ratio":
            return float(q["value"])
        return float(q["value"]) / self._need_base(q["unit"])

    def time(self, q: dict | None, default: float = 0.0) -> float:
        if q is None:
            return default
        if q["unit"] not in TIME_UNITS:
            raise ConfigurationError(f"{q['unit']!r} is not a time unit")
        if q["unit"] == "ratio":
            return float(q["value"])
        return float(q["value"]) * 1e-3 * 2.0 * math.pi * self._need_base(q["unit"])

    def axis_value(self, value: float, unit: str) -> float:
        return self.rate({"value": value, "unit": unit})


def coupling_split(peak: float, omega_c0: float, delta0: float, delta1: float,
                   qubit_peak: float) -> tuple[float, float]:
    """``(g_f, gc)`` that make both STIRAP legs peak at ``peak``."""
    lam_per_gc = 0.5 * omega_c0 * (1.0 / delta0 + 1.0 / delta1)
    if lam_per_gc == 0 or qubit_peak == 0:
        raise ConfigurationError("cannot derive g_f/gc from coupling with zero drive or qubit peak")
    return peak / qubit_peak, peak / lam_per_gc


def build_ensemble(block: dict | None, units: Units, seed: int) -> EnsembleSpec:
    block = block or {}
    return EnsembleSpec(
        groups=int(block.get("groups", 20)),
        sigma_detuning=units.rate(block.get("sigma_detuning")),
        sigma_phase=float(block["sigma_phase"]["value"]) if "sigma_phase" in block else 0.0,
        mode=block.get("mode", "stratified"),
        seed=seed,
        coupling_spread=float(block.get("coupling_spread", 0.0)),
    )


def build_node(block: dict, units: Units, seed: int, qubit_peak: float = 0.58,
               overrides: dict | None = None) -> NodeParams:
    """NodeParams from a node block; ``overrides`` replaces converted fields."""
    r = units.rate
    vals = dict(
        gamma1_qb=r(block.get("gamma1_qb")), gamma2_qb=r(block.get("gamma2_qb")),
        kappa=r(block.get("kappa")), xi=float(block.get("xi", 1.0)),
        spin_decay=r(block.get("spin_decay")), spin_dephasing=r(block.get("spin_dephasing")),
        delta0=r(block.get("delta0"), 1.0), delta1=r(block.get("delta1"), 1.0),
        dbar=r(block.get("dbar")), delta_q=r(block.get("delta_q")),
        gc=r(block.get("gc")), omega_c0=r(block.get("omega_c0")), g_f=r(block.get("g_f")),
    )
    if "coupling" in block:
        vals["g_f"], vals["gc"] = coupling_split(r(block["coupling"]), vals["omega_c0"],
                                                 vals["delta0"], vals["delta1"], qubit_peak)
    vals.update(overrides or {})
    return NodeParams(ensemble=build_ensemble(block.get("ensemble"), units, seed), **vals)


def build_network(cfg: dict, units: Units, node_overrides: dict | None = None) -> NetworkParams:
    net = cfg["network"]
    seed = cfg["seed"]
    node_a = build_node(cfg["node"], units, seed, overrides=node_overrides)
    if "node_b" in net:
        merged = {**cfg["node"], **net["node_b"]}
        node_b = build_node(merged, units, seed, overrides=node_overrides)
    else:
        node_b = node_a
    return NetworkParams(
        node_a, node_b, units.rate(net["dispersive_detuning"]),
        kappa_ex_a=units.rate(net["kappa_ex_a"]) if "kappa_ex_a" in net else None,
        kappa_ex_b=units.rate(net["kappa_ex_b"]) if "kappa_ex_b" in net else None,
    )


def swap_chirp_mode(cfg: dict) -> str:
    mode = cfg["pulse"].get("chirp_mode")
    if mode is None:
        mode = "constant" if cfg["scenario"] == "swap-constant-chirp" else "tracking"
    return mode


def build_swap_schedule(cfg: dict, params: NodeParams, delta_en: float, units: Units,
                        width_optical: float | None = None, width_qubit: float | None = None,
                        delay_factor: float | None = None) -> PulseSchedule:
    p = cfg["pulse"]
    wo = units.time(p["width_optical"]) if width_optical is None else width_optical
    wq = units.time(p["width_qubit"]) if width_qubit is None else width_qubit
    scale = max(wo, wq)
    delay = (p.get("delay_factor", 1.25) if delay_factor is None else delay_factor) * scale
    return stirap_schedule(params, delta_en, width_optical=wo, width_qubit=wq, delay=delay,
                           optical_center=p.get("center_factor", 2.5) * scale,
                           qubit_peak=p.get("qubit_peak", 0.58), chirp_mode=swap_chirp_mode(cfg),
                           stop=p.get("stop_factor", 12.0) * scale)


def build_network_schedule(cfg: dict, params: NetworkParams, units: Units,
                           width: float | None = None, center: float | None = None) -> PulseSchedule:
    p = cfg["pulse"]
    return network_schedule(params.node_a.omega_c0,
                            units.time(p["center"]) if center is None else center,
                            units.time(p["width"]) if width is None else width,
                            units.time(p["stop"]))

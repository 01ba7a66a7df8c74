"""Scenario configuration: TOML with mandatory unit suffixes.

Dimensioned values are strings such as ``"2.78 MHz"`` or ``"11 ms"``;
dimensionless values (optical depths, probabilities, counts) are bare
numbers. Values are converted to SI on load. Every violation is collected
before raising, so one run reports all of them.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import tomli

UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "rate": {"1/s": 1.0, "s^-1": 1.0, "Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "1/ms": 1e3, "1/us": 1e6},
    "sweep": {"Hz/s": 1.0, "kHz/s": 1e3, "MHz/s": 1e6, "GHz/s": 1e9, "MHz/ms": 1e9, "kHz/ms": 1e6,
              "MHz/us": 1e12},
    "voltage": {"V": 1.0, "mV": 1e-3, "kV": 1e3},
    "angle": {"rad": 1.0, "mrad": 1e-3, "deg": math.pi / 180},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S+)\s*$")

REQUIRED = object()


@dataclass(frozen=True)
class Field:
    kind: str  # a key of UNITS, or number / int / bool / str
    default: Any = REQUIRED
    lo: Optional[float] = None
    hi: Optional[float] = None
    lo_open: bool = False
    is_list: bool = False
    optional: bool = False


def _pos(kind, default=REQUIRED, **kw):
    return Field(kind, default, lo=0.0, lo_open=True, **kw)


def _nonneg(kind, default=REQUIRED, **kw):
    return Field(kind, default, lo=0.0, **kw)


def _prob(default=REQUIRED):
    return Field("number", default, lo=0.0, hi=1.0)


SCHEMA: dict[str, dict[str, Field]] = {
    "material": {
        "t1": _pos("time", 11e-3),
        "tz": _pos("time", 130e-3),
        "t_persistent": _pos("time", 900.0),
        "branch_beta": _prob(0.1),
        "persistent_fraction": _prob(),
    },
    "pump": {
        "sweep_span": _pos("frequency", optional=True, default=None),
        "sweep_rate": _pos("sweep"),
        "pump_rate": _nonneg("rate"),
        "duration": _nonneg("time", 120e-3),
        "stimulation_gain": Field("number", 1.0, lo=1.0),
        "t_extra": _nonneg("time", 23.5e-3),
        "t_wait": _nonneg("time", 86e-3),
        "resonance_width": _pos("frequency", optional=True, default=None),
    },
    "line": {
        "gamma": _pos("frequency"),
        "peak_depth": _nonneg("number"),
        "background": _nonneg("number", 0.0),
    },
    "comb": {
        "delta": _pos("frequency", 2.78e6),
        "finesse": Field("number", 2.6, lo=1.0, lo_open=True),
        "peak_depth": _nonneg("number", 0.5),
        "background": _nonneg("number", 1.5),
        "n_peaks": Field("int", 15, lo=1),
        "center_offset": Field("frequency", 0.0),
    },
    "pulse": {
        "fwhm": _pos("time", 100e-9),
        "mean_photons": _nonneg("number", 0.5),
        "center": Field("time", 0.0),
        "carrier_offset": Field("frequency", 0.0),
    },
    "field": {
        "u1": Field("voltage", 70.0),
        "u2": Field("voltage", optional=True, default=None),
        "t_flip": Field("time", optional=True, default=None),
        "t_on": Field("time", -1e-6),
        "t_off": Field("time", optional=True, default=None),
        "u_ref": _pos("voltage", 70.0),
        "b_ref": Field("number", 3.0, lo=1.0),
        "stark_width": _pos("frequency", optional=True, default=None),
    },
    "sim": {
        "resolution": _pos("time", 1e-9),
        "grid_points": Field("int", 2048, lo=256),
        "window_width": _pos("frequency", 60e6),
        "t_end": _pos("time", optional=True, default=None),
    },
    "detector": {
        "efficiency": _prob(0.07),
        "dark_rate": _nonneg("rate", 10.0),
        "path_transmission": _prob(0.15),
        "chopper_open": Field("bool", True),
        "collection": _nonneg("number", 1.0),
        "bin_width": _pos("time", 10e-9),
    },
    "trials": {
        "n_trials": Field("int", 1_000_000, lo=1),
        "n_cycles": Field("int", 4000, lo=1),
        "cycle_rate": _pos("frequency", 3.0),
        "trial_period": _pos("time", 5e-6),
        "measure_duration": _pos("time", 10e-3),
        "window": _pos("time", 1e-6),
    },
    "noise": {
        "visibility_v1": Field("number", optional=True, default=None, lo=0.0, hi=1.0, lo_open=True),
        "sigma": _nonneg("angle", optional=True, default=None),
    },
    "scan": {
        "gains": Field("number", [1.0], lo=1.0, is_list=True),
        "t_waits": _nonneg("time", [86e-3], is_list=True),
        "n_bars": _nonneg("number", [0.5], is_list=True),
        "u2": _pos("voltage", [70.0], is_list=True),
        "d_values": _pos("number", [1.0], is_list=True),
        "n_peaks": Field("int", [15], lo=1, is_list=True),
        "delta0_points": Field("int", 25, lo=6),
        "delta0_periods": _pos("number", 2.0),
    },
    "capacity": {
        "target_efficiency": _pos("number", 0.1),
        "c": _pos("number", 1.0),
        "d0": _nonneg("number", 0.0),
        "d": _pos("number", 0.5),
        "finesse": Field("number", 2.6, lo=1.0, lo_open=True),
    },
}

TOP_LEVEL = {"scenario", "seed", "output_dir"}

# sections whose required keys must be present for each scenario
SCENARIO_SECTIONS = {
    "noise-decay": ("material", "pump", "line", "sim", "detector", "trials", "scan"),
    "snr-vs-wait": ("material", "pump", "line", "field", "pulse", "sim", "detector", "trials", "scan"),
    "crib-echo": ("material", "pump", "line", "field", "pulse", "sim", "detector", "trials"),
    "pulse-shape": ("line", "field", "pulse", "sim", "scan"),
    "afc-echo": ("comb", "pulse", "sim", "detector", "trials"),
    "fringe-scan": ("comb", "pulse", "sim", "detector", "trials", "noise", "scan"),
    "combined-gate": ("comb", "pulse", "field", "sim"),
    "capacity-curves": ("capacity", "scan"),
}


class ConfigError(ValueError):
    """Raised with the full list of schema violations."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int
    output_dir: Optional[str]
    params: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.params.get(name, {})

    def canonical(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "params": self.params}

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_quantity(value: Any, kind: str, path: str) -> float:
    """Convert ``"<number> <unit>"`` to SI for a dimensioned ``kind``."""
    if isinstance(value, bool) or not isinstance(value, str):
        raise ValueError(f"{path}: expected a quantity with a unit ({kind}), got {value!r}")
    m = _QUANTITY.match(value)
    if not m:
        raise ValueError(f"{path}: cannot parse {value!r}; expected e.g. '2.78 MHz'")
    number, unit = m.groups()
    table = UNITS[kind]
    if unit not in table:
        raise ValueError(f"{path}: unit {unit!r} is not a {kind} unit (allowed: {', '.join(table)})")
    return float(number) * table[unit]


def _convert(value: Any, spec: Field, path: str) -> Any:
    if spec.kind in UNITS:
        return parse_quantity(value, spec.kind, path)
    if spec.kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{path}: expected a bare number, got {value!r}")
        return float(value)
    if spec.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if spec.kind == "bool":
        if not isinstance(value, bool):
            raise ValueError(f"{path}: expected true or false, got {value!r}")
        return value
    if spec.kind == "str":
        if not isinstance(value, str):
            raise ValueError(f"{path}: expected a string, got {value!r}")
        return value
    raise AssertionError(spec.kind)


def _check_range(x: float, spec: Field, path: str) -> Optional[str]:
    if spec.lo is not None and (x < spec.lo or (spec.lo_open and x == spec.lo)):
        op = ">" if spec.lo_open else ">="
        return f"{path}: value {x:g} out of range (must be {op} {spec.lo:g})"
    if spec.hi is not None and x > spec.hi:
        return f"{path}: value {x:g} out of range (must be <= {spec.hi:g})"
    return None


def default_config_text(scenario: str) -> str:
    if scenario not in SCENARIO_SECTIONS:
        raise ConfigError([f"scenario: unknown scenario {scenario!r}"])
    return resources.files("echomem.harness").joinpath("scenarios", f"{scenario}.toml").read_text()


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_config(raw: Any, seed: Optional[int] = None, use_defaults: bool = True) -> ScenarioConfig:
    """Parse TOML text (or an already-loaded mapping) into a :class:`ScenarioConfig`.

    The user document is layered over the built-in file for its scenario,
    then over schema defaults. Raises :class:`ConfigError` listing every
    violation.
    """
    errors: list[str] = []
    if isinstance(raw, (str, bytes)):
        try:
            doc = tomli.loads(raw.decode() if isinstance(raw, bytes) else raw)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError([f"syntax: {exc}"]) from exc
    elif isinstance(raw, dict):
        doc = raw
    else:
        raise ConfigError([f"config must be TOML text or a mapping, got {type(raw).__name__}"])

    name = doc.get("scenario")
    if not isinstance(name, str) or name not in SCENARIO_SECTIONS:
        raise ConfigError([f"scenario: missing or unknown scenario {name!r} "
                           f"(known: {', '.join(SCENARIO_SECTIONS)})"])
    if use_defaults:
        doc = _merge(tomli.loads(default_config_text(name)), doc)

    for key, value in doc.items():
        if key not in TOP_LEVEL and key not in SCHEMA:
            errors.append(f"{key}: unknown key")
        elif key in SCHEMA and not isinstance(value, dict):
            errors.append(f"{key}: expected a table")

    s = doc.get("seed", 0) if seed is None else seed
    if isinstance(s, bool) or not isinstance(s, int) or s < 0:
        errors.append(f"seed: expected a non-negative integer, got {s!r}")
        s = 0
    out_dir = doc.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        errors.append("output_dir: expected a string")

    params: dict[str, dict] = {}
    needed = SCENARIO_SECTIONS[name]
    for sec, fields in SCHEMA.items():
        given = doc.get(sec, {})
        if not isinstance(given, dict):
            continue
        for key in given:
            if key not in fields:
                errors.append(f"{sec}.{key}: unknown key")
        resolved = {}
        for key, spec in fields.items():
            path = f"{sec}.{key}"
            if key not in given:
                if spec.default is REQUIRED:
                    if sec in needed:
                        errors.append(f"{path}: required value missing")
                    continue
                resolved[key] = copy.deepcopy(spec.default)
                continue
            value = given[key]
            try:
                if spec.is_list:
                    if not isinstance(value, list) or not value:
                        raise ValueError(f"{path}: expected a non-empty list")
                    conv = [_convert(v, spec, f"{path}[{i}]") for i, v in enumerate(value)]
                else:
                    conv = _convert(value, spec, path)
            except ValueError as exc:
                errors.append(str(exc))
                continue
            for i, x in enumerate(conv if spec.is_list else [conv]):
                if isinstance(x, (int, float)) and not isinstance(x, bool):
                    msg = _check_range(x, spec, f"{path}[{i}]" if spec.is_list else path)
                    if msg:
                        errors.append(msg)
            resolved[key] = conv
        params[sec] = resolved

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(name, int(s), out_dir, params)


def load_config(path, seed: Optional[int] = None) -> ScenarioConfig:
    return validate_config(Path(path).read_text(), seed=seed)

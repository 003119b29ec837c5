"""Flat ``key = value`` experiment configuration.

Units live in the key names (``*_dbm``, ``*_ghz``, ``*_m``). Blank lines and
``#`` comments are ignored; unknown keys are errors. Anything not given
falls back to the default simulation setup (d = 3 m, P_f = 10 dBm,
f_c = 28 GHz, noise -90 dBm, 5 users, 120 m x 20 m, caps 10 dBm, L = D_x,
1000 trials).
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .antenna import PsoConfig
from .ao import AoConfig, SchemeKind
from .harness import SWEEP_PARAMS, ExperimentSpec
from .model import Scenario, ValidationError, dbm_to_watts
from .power import DinkelbachConfig


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def _float(key, raw):
    try:
        v = float(raw.replace("−", "-"))
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", key) from None
    if not np.isfinite(v):
        raise ConfigError(f"expected a finite number, got {raw!r}", key)
    return v


def _positive(key, raw):
    v = _float(key, raw)
    if v <= 0:
        raise ConfigError(f"must be > 0, got {raw}", key)
    return v


def _int(key, raw, minimum=0):
    try:
        v = int(raw.replace("−", "-"))
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", key) from None
    if v < minimum:
        raise ConfigError(f"must be >= {minimum}, got {v}", key)
    return v


def _float_list(key, raw):
    vals = [_float(key, p) for p in raw.split(",") if p.strip()]
    if not vals:
        raise ConfigError("expected a comma-separated list of numbers", key)
    return tuple(vals)


def _schemes(key, raw):
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(SchemeKind(part))
        except ValueError:
            choices = ", ".join(s.value for s in SchemeKind)
            raise ConfigError(f"unknown scheme {part!r} (choices: {choices})", key) from None
    if not out:
        raise ConfigError("expected at least one scheme", key)
    return tuple(out)


def _sweep_param(key, raw):
    raw = raw.strip()
    if raw not in SWEEP_PARAMS:
        raise ConfigError(f"must be one of {', '.join(SWEEP_PARAMS)}, got {raw!r}", key)
    return raw


PARSERS = {
    "carrier_frequency_ghz": _positive,
    "wave_speed_m_per_s": _positive,
    "antenna_height_m": _positive,
    "waveguide_length_m": _positive,
    "area_x_m": _positive,
    "area_y_m": _positive,
    "noise_power_dbm": _float,
    "fixed_power_dbm": _float,
    "max_power_dbm": _float,
    "n_users": lambda k, r: _int(k, r, 1),
    "trials": lambda k, r: _int(k, r, 1),
    "master_seed": lambda k, r: _int(k, r, 0),
    "schemes": _schemes,
    "sweep_param": _sweep_param,
    "sweep_values": _float_list,
    "grid_step_m": _positive,
    "max_outer_iterations": lambda k, r: _int(k, r, 1),
    "ee_improvement_tolerance": _positive,
    "dinkelbach_tolerance": _positive,
    "dinkelbach_max_iterations": lambda k, r: _int(k, r, 1),
    "pso_swarm_size": lambda k, r: _int(k, r, 2),
    "pso_max_iterations": lambda k, r: _int(k, r, 1),
}


def parse_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"unknown key (line {lineno} of {source})", key)
        if key in values:
            raise ConfigError(f"duplicate key (line {lineno} of {source})", key)
        values[key] = PARSERS[key](key, raw)
    return values


def build_spec(values: dict) -> ExperimentSpec:
    v = dict(values)
    area_x = v.get("area_x_m", 120.0)
    try:
        scenario = Scenario(
            carrier_frequency_hz=v.get("carrier_frequency_ghz", 28.0) * 1e9,
            wave_speed_m_per_s=v.get("wave_speed_m_per_s", Scenario.wave_speed_m_per_s),
            antenna_height_m=v.get("antenna_height_m", 3.0),
            waveguide_length_m=v.get("waveguide_length_m", area_x),
            area_x_m=area_x,
            area_y_m=v.get("area_y_m", 20.0),
            noise_power_w=dbm_to_watts(v.get("noise_power_dbm", -90.0)),
            fixed_power_w=dbm_to_watts(v.get("fixed_power_dbm", 10.0)),
        )
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    ao = AoConfig(
        max_outer_iterations=v.get("max_outer_iterations", 20),
        ee_improvement_tolerance=v.get("ee_improvement_tolerance", 1e-8),
        dinkelbach=DinkelbachConfig(
            tolerance=v.get("dinkelbach_tolerance", 1e-6),
            max_iterations=v.get("dinkelbach_max_iterations", 100),
        ),
        pso=PsoConfig(
            swarm_size=v.get("pso_swarm_size", 30),
            max_iterations=v.get("pso_max_iterations", 200),
        ),
        grid_step_m=v.get("grid_step_m", 0.01),
    )
    if ao.grid_step_m > scenario.waveguide_length_m:
        raise ConfigError("must not exceed the waveguide length", "grid_step_m")

    sweep_param = v.get("sweep_param", "max_power_dbm")
    if "sweep_values" in v:
        sweep_values = v["sweep_values"]
    elif "sweep_param" in v:
        raise ConfigError("sweep_param given without sweep_values", "sweep_values")
    else:
        sweep_values = (v.get("max_power_dbm", 10.0),)
    if any(b <= a for a, b in zip(sweep_values, sweep_values[1:])):
        raise ConfigError("must be strictly increasing", "sweep_values")
    if sweep_param == "area_x_m" and min(sweep_values) <= 0:
        raise ConfigError("area sweep values must be positive", "sweep_values")

    return ExperimentSpec(
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        trials=v.get("trials", 1000),
        base_scenario=scenario,
        n_users=v.get("n_users", 5),
        max_power_dbm=v.get("max_power_dbm", 10.0),
        schemes=v.get("schemes", tuple(SchemeKind)),
        master_seed=v.get("master_seed", 0),
        ao=ao,
        couple_length_to_area="waveguide_length_m" not in v,
    )


def parse_config(path) -> ExperimentSpec:
    """Read and validate a config file into an :class:`ExperimentSpec`."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return build_spec(parse_text(p.read_text(), str(p)))


def override(spec: ExperimentSpec, *, seed=None, trials=None) -> ExperimentSpec:
    changes = {}
    if seed is not None:
        changes["master_seed"] = seed
    if trials is not None:
        changes["trials"] = trials
    return dataclasses.replace(spec, **changes) if changes else spec

"""Plain-text scenario/training configuration.

An INI document with a ``[scenario]`` and an optional ``[dqn]`` section::

    [scenario]
    dst_pos_km = 4000, 0, 0
    hap_init_pos_km = 2000, 0
    episode_slots = 513

    [dqn]
    hidden = 64, 64
    total_iterations = 50000

Length keys take a unit suffix, ``_km`` or ``_m``; everything is converted
to SI on load. Unknown keys are rejected so typos do not pass silently.
"""

from __future__ import annotations

import configparser
from dataclasses import fields, replace
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .agent import DqnConfig
from .channel import RadioParams
from .env import ScenarioConfig
from .kinematics import KinematicsConfig


class ConfigError(ValueError):
    pass


def _floats(text: str):
    return [float(t) for t in text.replace(",", " ").split()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (target, kind, is_length); target is "field" or "group.field"
_SCENARIO_KEYS: Dict[str, Tuple[str, str, bool]] = {
    "src_pos": ("src_pos", "vec", True),
    "dst_pos": ("dst_pos", "vec", True),
    "bandwidth_hz": ("radio.bandwidth", "float", False),
    "reference_snr": ("radio.reference_snr", "float", False),
    "pathloss_exponent": ("radio.pathloss_exponent", "float", False),
    "dt_s": ("kin.dt", "float", False),
    "a_max": ("kin.a_max", "float", False),
    "window_length": ("kin.window_length", "float", True),
    "candidate_count": ("kin.candidate_count", "int", False),
    "sat_count": ("sat_count", "int", False),
    "sat_speed_m_s": ("sat_speed", "float", False),
    "sat_speed_km_s": ("sat_speed", "float_km", False),
    "sat_altitude": ("sat_altitude", "float", True),
    "orbit_length": ("orbit_length", "float", True),
    "phase_offset": ("phase_offset", "float", True),
    "orbit_axis": ("orbit_axis", "vec", False),
    "track_origin": ("track_origin", "vec", True),
    "hap_altitude": ("hap_altitude", "float", True),
    "hap_init_pos": ("hap_init_pos", "vec", True),
    "hap_init_vel": ("hap_init_vel", "vec", False),
    "episode_slots": ("episode_slots", "int", False),
    "accel_levels": ("accel_levels", "int", False),
    "reward_mu": ("reward_mu", "float", False),
    "reward_sigma": ("reward_sigma", "float", False),
    "buffered": ("buffered", "bool", False),
    "observe_velocity": ("observe_velocity", "bool", False),
    "area_min": ("area_min", "vec", True),
    "area_max": ("area_max", "vec", True),
}

_DQN_KINDS = {
    "gamma": "float", "batch_size": "int", "target_sync_period": "int",
    "total_iterations": "int", "eps_start": "float", "eps_end": "float",
    "eps_decay_fraction": "float", "replay_capacity": "int", "update_every": "int",
    "hidden": "ints", "lr": "float", "loss_reduction": "str", "clip_norm": "float",
    "keep_best_every": "int",
}


def _convert(kind: str, raw: str, scale: float = 1.0):
    if kind == "float":
        return float(raw) * scale
    if kind == "float_km":
        return float(raw) * 1e3
    if kind == "int":
        return int(raw)
    if kind == "bool":
        return _bool(raw)
    if kind == "vec":
        return np.array(_floats(raw)) * scale
    if kind == "ints":
        return [int(v) for v in _floats(raw)]
    return raw.strip()


def _lookup(key: str):
    if key in _SCENARIO_KEYS:
        return _SCENARIO_KEYS[key], 1.0
    for suffix, scale in (("_km", 1e3), ("_m", 1.0)):
        if key.endswith(suffix):
            base = key[: -len(suffix)]
            entry = _SCENARIO_KEYS.get(base)
            if entry is not None and entry[2]:
                return entry, scale
    return None, None


def parse_config(text: str, source: str = "<string>") -> Tuple[ScenarioConfig, DqnConfig]:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    unknown = set(cp.sections()) - {"scenario", "dqn"}
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")

    top, groups = {}, {"radio": {}, "kin": {}}
    if cp.has_section("scenario"):
        for key, raw in cp.items("scenario"):
            entry, scale = _lookup(key)
            if entry is None:
                raise ConfigError(f"{source}: unknown scenario key {key!r}")
            target, kind, is_length = entry
            if is_length and key in _SCENARIO_KEYS:
                raise ConfigError(f"{source}: {key!r} needs a unit suffix (_km or _m)")
            if not raw.strip():
                continue
            try:
                value = _convert(kind, raw, scale)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from exc
            if "." in target:
                group, name = target.split(".")
                groups[group][name] = value
            else:
                top[target] = value

    dqn_kw = {}
    if cp.has_section("dqn"):
        for key, raw in cp.items("dqn"):
            if key not in _DQN_KINDS:
                raise ConfigError(f"{source}: unknown dqn key {key!r}")
            if not raw.strip():
                continue
            try:
                dqn_kw[key] = _convert(_DQN_KINDS[key], raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from exc

    try:
        scenario = ScenarioConfig(
            radio=RadioParams(**groups["radio"]), kin=KinematicsConfig(**groups["kin"]), **top
        )
        dqn = DqnConfig(**dqn_kw)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return scenario, dqn


def load_config(path) -> Tuple[ScenarioConfig, DqnConfig]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    return parse_config(text, source=str(path))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(repr(float(v)) if not isinstance(v, (int, np.integer)) else str(v)
                         for v in np.asarray(value).tolist())
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(scenario: ScenarioConfig, dqn: DqnConfig) -> str:
    """Render both configs as INI text in SI units; ``parse_config`` inverts it."""
    lines = ["[scenario]"]
    for key, (target, kind, is_length) in _SCENARIO_KEYS.items():
        if kind == "float_km":
            continue
        if "." in target:
            group, name = target.split(".")
            value = getattr(getattr(scenario, group), name)
        else:
            value = getattr(scenario, target)
        if value is None:
            continue
        lines.append(f"{key}{'_m' if is_length else ''} = {_fmt(value)}")
    lines += ["", "[dqn]"]
    for f in fields(DqnConfig):
        value = getattr(dqn, f.name)
        if value is None:
            continue
        if f.name == "hidden":
            lines.append(f"hidden = {', '.join(str(h) for h in value)}")
        else:
            lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def with_iterations(dqn: DqnConfig, iterations: int) -> DqnConfig:
    return replace(dqn, total_iterations=int(iterations))

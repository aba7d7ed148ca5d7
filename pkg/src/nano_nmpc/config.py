"""JSON run configuration: vehicle, OCP, scenario, and simulation sections.

Every tunable default is exposed here; unknown keys are rejected so that a
typo fails loudly instead of silently running with stock values.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError
from .harness import SimConfig
from .model import VehicleParams
from .ocp import RATE_LIMIT, default_ocp_spec
from .reference import (
    CruiseScenario,
    HelixScenario,
    HoverScenario,
    SCENARIO_KINDS,
    StepScenario,
)

_VEHICLE_KEYS = {"m", "Jx", "Jy", "Jz", "l", "k_t", "k_d", "g"}
_OCP_KEYS = {
    "horizon", "dt", "w_position", "w_quaternion", "w_velocity", "w_thrust",
    "w_rates", "terminal_scale", "w_terminal", "thrust_min", "thrust_max",
    "rate_limit", "rk4_substeps",
}
_SCENARIO_KEYS = {
    "kind", "duration", "altitude", "xy", "altitudes", "dwells",
    "start_xy", "end_xy", "cruise_altitude", "t_takeoff", "t_cruise", "t_land",
    "radius", "angular_rate", "climb_rate", "z0", "center_xy",
}
_SIM_KEYS = {
    "control_rate", "plant_substeps", "rate_gains", "duration", "initial_state",
    "transient_cut", "settle_tolerance", "seed", "noise_enabled",
    "noise_pos_std", "noise_rate_std", "warm_start",
}
_SECTIONS = {"vehicle", "ocp", "scenario", "sim"}


def _check_keys(section: str, given: dict, allowed: set) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")


def load_config(path) -> dict:
    """Read and structurally validate a JSON config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _check_keys("config", raw, _SECTIONS)
    _check_keys("vehicle", raw.get("vehicle", {}), _VEHICLE_KEYS)
    _check_keys("ocp", raw.get("ocp", {}), _OCP_KEYS)
    _check_keys("scenario", raw.get("scenario", {}), _SCENARIO_KEYS)
    _check_keys("sim", raw.get("sim", {}), _SIM_KEYS)
    return raw


def build_vehicle(section: dict) -> VehicleParams:
    base = VehicleParams()
    J = (
        section.get("Jx", base.J[0]),
        section.get("Jy", base.J[1]),
        section.get("Jz", base.J[2]),
    )
    return VehicleParams(
        m=section.get("m", base.m), J=J, l=section.get("l", base.l),
        k_t=section.get("k_t", base.k_t), k_d=section.get("k_d", base.k_d),
        g=section.get("g", base.g),
    )


def build_scenario(section: dict):
    kind = section.get("kind", "hover")
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"scenario kind must be one of {SCENARIO_KINDS}, got {kind!r}")
    args = {k: v for k, v in section.items() if k != "kind"}
    for key in ("xy", "start_xy", "end_xy", "center_xy"):
        if key in args:
            args[key] = tuple(float(v) for v in args[key])
    for key in ("altitudes", "dwells"):
        if key in args:
            args[key] = tuple(float(v) for v in args[key])
    cls = {
        "hover": HoverScenario,
        "steps": StepScenario,
        "cruise": CruiseScenario,
        "helix": HelixScenario,
    }[kind]
    if kind == "cruise":
        args.pop("duration", None)  # cruise duration is the sum of its phases
    try:
        return cls(**args)
    except TypeError as exc:
        raise ConfigError(f"bad scenario parameters for '{kind}': {exc}") from exc


def build_ocp(section: dict, params: VehicleParams):
    W = np.concatenate([
        np.asarray(section.get("w_position", (25.0, 25.0, 25.0)), dtype=float),
        np.asarray(section.get("w_quaternion", (1.0, 1.0, 1.0, 1.0)), dtype=float),
        np.asarray(section.get("w_velocity", (1.0, 1.0, 1.0)), dtype=float),
        np.concatenate([
            [float(section.get("w_thrust", 0.1))],
            np.asarray(section.get("w_rates", (0.1, 0.1, 0.1)), dtype=float),
        ]),
    ])
    if "w_terminal" in section:
        W_N = np.asarray(section["w_terminal"], dtype=float)
    else:
        W_N = float(section.get("terminal_scale", 10.0)) * W[:10]
    t_min = float(section.get("thrust_min", 0.0))
    t_max = float(section.get("thrust_max", 2.0 * params.hover_thrust))
    rate = float(section.get("rate_limit", RATE_LIMIT))
    return default_ocp_spec(
        params,
        N=int(section.get("horizon", 10)),
        dt=float(section.get("dt", 0.1)),
        W=W, W_N=W_N,
        u_lb=np.array([t_min, -rate, -rate, -rate]),
        u_ub=np.array([t_max, rate, rate, rate]),
        n_rk4_steps=int(section.get("rk4_substeps", 3)),
    )


def build_sim_config(raw: dict | None = None, **overrides) -> SimConfig:
    """Assemble a :class:`SimConfig` from a validated config dict.

    ``overrides`` patch individual sections after the file content, e.g.
    ``scenario={"kind": "helix"}`` or ``sim={"seed": 7}`` from CLI flags.
    """
    raw = dict(raw or {})
    for key, patch in overrides.items():
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config section override: {key}")
        merged = dict(raw.get(key, {}))
        merged.update(patch)
        raw[key] = merged
    validate_config(raw)

    params = build_vehicle(raw.get("vehicle", {}))
    scenario = build_scenario(raw.get("scenario", {}))
    ocp = build_ocp(raw.get("ocp", {}), params)
    sim = dict(raw.get("sim", {}))
    if "initial_state" in sim and sim["initial_state"] is not None:
        sim["initial_state"] = np.asarray(sim["initial_state"], dtype=float)
    if "rate_gains" in sim:
        sim["rate_gains"] = tuple(float(v) for v in sim["rate_gains"])
    try:
        return SimConfig(scenario=scenario, params=params, ocp=ocp, **sim)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad sim section: {exc}") from exc

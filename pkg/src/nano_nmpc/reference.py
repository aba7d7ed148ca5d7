"""Closed-form reference trajectories and per-cycle horizon windowing.

Four scenario families: fixed-altitude hover, a staircase of hover altitudes,
a takeoff/straight-cruise/land profile, and a helical ascent.  Every scenario
commands identity attitude (zero yaw) and hover thrust with zero rates as the
input reference.  Velocity references are the exact time derivatives of the
position references within each differentiable phase; the staircase is
discontinuous in position by construction.

Smooth point-to-point phases use cubic time scaling
``s(tau) = 3 tau^2 - 2 tau^3``, which starts and ends at rest and peaks at
1.5x the average speed mid-phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NX, VehicleParams, hover_input
from .ocp import ReferenceWindow

SCENARIO_KINDS = ("hover", "steps", "cruise", "helix")


@dataclass(frozen=True)
class HoverScenario:
    kind = "hover"
    preview = True
    altitude: float = 1.0
    xy: tuple[float, float] = (0.0, 0.0)
    duration: float = 20.0

    def start_position(self):
        return np.array([self.xy[0], self.xy[1], 0.0])


@dataclass(frozen=True)
class StepScenario:
    """Hover staircase: hold each altitude for its dwell, last one to the end.

    Setpoint jumps are regulation targets, not a trajectory to anticipate, so
    this scenario is windowed sample-and-hold (``preview = False``): looking
    across an upcoming jump would command the climb/descent up to a full
    horizon early and the vehicle would never hold the current altitude band.
    """

    kind = "steps"
    preview = False
    altitudes: tuple[float, ...] = (0.3, 1.0, 1.5, 0.2)
    dwells: tuple[float, ...] = (1.0, 2.0, 2.0)
    xy: tuple[float, float] = (0.0, 0.0)
    duration: float = 20.0

    def __post_init__(self):
        if len(self.dwells) != len(self.altitudes) - 1:
            raise ValueError("need one dwell per altitude except the last")

    def altitude_at(self, t: float) -> float:
        edge = 0.0
        for z, dwell in zip(self.altitudes[:-1], self.dwells):
            edge += dwell
            if t < edge:
                return z
        return self.altitudes[-1]

    def step_times(self) -> np.ndarray:
        return np.cumsum(self.dwells)

    def start_position(self):
        return np.array([self.xy[0], self.xy[1], 0.0])


@dataclass(frozen=True)
class CruiseScenario:
    """Vertical takeoff, constant-altitude straight cruise, vertical landing."""

    kind = "cruise"
    preview = True
    start_xy: tuple[float, float] = (0.0, 0.0)
    end_xy: tuple[float, float] = (1.0, 1.0)
    cruise_altitude: float = 1.0
    t_takeoff: float = 5.0
    t_cruise: float = 10.0
    t_land: float = 5.0

    @property
    def duration(self) -> float:
        return self.t_takeoff + self.t_cruise + self.t_land

    def start_position(self):
        return np.array([self.start_xy[0], self.start_xy[1], 0.0])


@dataclass(frozen=True)
class HelixScenario:
    kind = "helix"
    preview = True
    radius: float = 1.0
    angular_rate: float = 0.5
    climb_rate: float = 0.1
    z0: float = 0.0
    center_xy: tuple[float, float] = (0.0, 0.0)
    duration: float = 20.0

    def start_position(self):
        return np.array(
            [self.center_xy[0] + self.radius, self.center_xy[1], self.z0]
        )


def _cubic_scaling(t: float, T: float) -> tuple[float, float]:
    """Cubic time scaling s(t/T) and its time derivative."""
    if T <= 0.0:
        return 1.0, 0.0
    tau = min(max(t / T, 0.0), 1.0)
    s = tau * tau * (3.0 - 2.0 * tau)
    sdot = 6.0 * tau * (1.0 - tau) / T
    return s, sdot


def _assemble(p, v) -> np.ndarray:
    x = np.zeros(NX)
    x[0:3] = p
    x[3] = 1.0
    x[7:10] = v
    return x


def sample(scenario, t: float, params: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    """Reference state and input at time ``t`` (clamped to the scenario span)."""
    t = min(max(t, 0.0), scenario.duration)
    u_d = hover_input(params)

    if scenario.kind == "hover":
        p = np.array([scenario.xy[0], scenario.xy[1], scenario.altitude])
        return _assemble(p, np.zeros(3)), u_d

    if scenario.kind == "steps":
        p = np.array([scenario.xy[0], scenario.xy[1], scenario.altitude_at(t)])
        return _assemble(p, np.zeros(3)), u_d

    if scenario.kind == "cruise":
        a = np.asarray(scenario.start_xy, dtype=float)
        b = np.asarray(scenario.end_xy, dtype=float)
        zc = scenario.cruise_altitude
        if t < scenario.t_takeoff:
            s, sdot = _cubic_scaling(t, scenario.t_takeoff)
            p = np.array([a[0], a[1], zc * s])
            v = np.array([0.0, 0.0, zc * sdot])
        elif t < scenario.t_takeoff + scenario.t_cruise:
            s, sdot = _cubic_scaling(t - scenario.t_takeoff, scenario.t_cruise)
            xy = a + (b - a) * s
            vxy = (b - a) * sdot
            p = np.array([xy[0], xy[1], zc])
            v = np.array([vxy[0], vxy[1], 0.0])
        else:
            s, sdot = _cubic_scaling(
                t - scenario.t_takeoff - scenario.t_cruise, scenario.t_land
            )
            p = np.array([b[0], b[1], zc * (1.0 - s)])
            v = np.array([0.0, 0.0, -zc * sdot])
        return _assemble(p, v), u_d

    if scenario.kind == "helix":
        r, w, c = scenario.radius, scenario.angular_rate, scenario.climb_rate
        cx, cy = scenario.center_xy
        p = np.array(
            [cx + r * np.cos(w * t), cy + r * np.sin(w * t), scenario.z0 + c * t]
        )
        v = np.array([-r * w * np.sin(w * t), r * w * np.cos(w * t), c])
        return _assemble(p, v), u_d

    raise ValueError(f"unknown scenario kind: {scenario.kind!r}")


def window(scenario, t: float, N: int, dt: float, params: VehicleParams) -> ReferenceWindow:
    """References at ``t, t+dt, ..., t+N dt``; endpoint-clamped, never
    extrapolated past the scenario end.

    Scenarios with ``preview = False`` (setpoint schedules) are tiled with the
    sample at ``t`` instead of sampled ahead.
    """
    if N < 1:
        raise ValueError("horizon must be >= 1")
    states = np.empty((N + 1, NX))
    inputs = np.empty((N, 4))
    if not getattr(scenario, "preview", True):
        x_d, u_d = sample(scenario, t, params)
        states[:] = x_d
        inputs[:] = u_d
        return ReferenceWindow(states=states, inputs=inputs)
    for i in range(N + 1):
        x_d, u_d = sample(scenario, t + i * dt, params)
        states[i] = x_d
        if i < N:
            inputs[i] = u_d
    return ReferenceWindow(states=states, inputs=inputs)


def takeoff_cruise_land(scenario: CruiseScenario, t: float, params: VehicleParams):
    """Alias for :func:`sample` restricted to the cruise scenario."""
    if scenario.kind != "cruise":
        raise ValueError("takeoff_cruise_land expects a cruise scenario")
    return sample(scenario, t, params)

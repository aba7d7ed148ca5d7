"""Closed-loop simulation: rate-input NMPC flying a torque-driven plant.

The plant integrates the full 13-state rigid body at a sub-stepped rate while
the controller runs at the control rate on the reduced 10-state model, which
creates realistic model mismatch.  A feedback-linearizing rate loop bridges
the two: it turns the commanded body rates into torques with gyroscopic
compensation, giving a first-order closed rate response per axis.

Each control period: measure (optional seeded Gaussian noise) -> reduce and
renormalize -> window the reference -> one real-time iteration -> hold the
thrust and rate commands while the plant sub-steps -> renormalize the plant
quaternion once.  Runs are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import model as qm
from .errors import SimulationError
from .integrator import rk4_step
from .model import QuadrotorPlantModel, VehicleParams, quat_normalize, reduce_state
from .ocp import clamp_and_check_bounds
from .qp import OPTIMAL
from .reference import sample, window
from .solver import cold_start_trajectory, rti_step, shift

CSV_COLUMNS = (
    "t", "x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz",
    "wx", "wy", "wz", "x_d", "y_d", "z_d", "T", "wx_cmd", "wy_cmd", "wz_cmd",
    "qp_status", "kkt",
)
TIMING_COLUMNS = ("t_prepare", "t_feedback", "t_total")


@dataclass
class SimConfig:
    """Everything a closed-loop run depends on."""

    scenario: object
    params: VehicleParams
    ocp: OcpSpec
    control_rate: float = 10.0
    plant_substeps: int = 10
    rate_gains: tuple[float, float, float] = (20.0, 20.0, 20.0)
    duration: float | None = None  # None: use the scenario duration
    initial_state: np.ndarray | None = None  # full 13-state; None: scenario start
    transient_cut: float = 5.0
    settle_tolerance: float = 0.05
    seed: int = 0
    noise_enabled: bool = False
    noise_pos_std: float = 0.0
    noise_rate_std: float = 0.0
    warm_start: bool = True

    def __post_init__(self):
        if self.control_rate <= 0:
            raise ValueError("control rate must be positive")
        if self.plant_substeps < 1:
            raise ValueError("need at least one plant substep per period")

    @property
    def run_duration(self) -> float:
        return self.scenario.duration if self.duration is None else self.duration

    def resolve_initial_state(self) -> np.ndarray:
        if self.initial_state is not None:
            x = np.asarray(self.initial_state, dtype=float)
            if x.shape != (qm.NX_FULL,):
                raise ValueError("initial state must have 13 components")
            return x.copy()
        return qm.full_state(self.scenario.start_position())


@dataclass
class SimLog:
    t: np.ndarray
    state: np.ndarray       # (rows, 13) plant state at each control instant
    ref_state: np.ndarray   # (rows, 10) reference sample
    u: np.ndarray           # (rows, 4) applied thrust + rate commands
    wrench: np.ndarray      # (rows, 4) thrust + torques at period start
    qp_status: list
    kkt: np.ndarray
    qp_iterations: np.ndarray
    prepare_s: np.ndarray
    feedback_s: np.ndarray
    total_s: np.ndarray

    @property
    def rows(self) -> int:
        return self.t.shape[0]

    def position_error(self) -> np.ndarray:
        return np.linalg.norm(self.state[:, 0:3] - self.ref_state[:, 0:3], axis=1)


@dataclass
class RunSummary:
    rms_pos_error: float
    max_pos_error: float
    settling: list
    solver_time_mean: float
    solver_time_max: float
    solver_time_p50: float
    solver_time_p90: float
    solver_time_p99: float
    prepare_time_mean: float
    feedback_time_mean: float
    mean_kkt: float
    bound_violations: int
    solver_failures: int
    rows: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def rate_inner_loop(w_cmd, w, params: VehicleParams, gains=(20.0, 20.0, 20.0)) -> np.ndarray:
    """Torques tracking the commanded body rates.

    ``tau = J Kp (w_cmd - w) + w x (J w)``: proportional feedback through the
    inertia plus gyroscopic compensation, so each axis closes as a first-order
    lag with time constant ``1/Kp``.
    """
    w = np.asarray(w, dtype=float)
    w_cmd = np.asarray(w_cmd, dtype=float)
    J = params.J_diag
    return J * np.asarray(gains, dtype=float) * (w_cmd - w) + np.cross(w, J * w)


def run_simulation(config: SimConfig) -> tuple[SimLog, RunSummary]:
    """Fly the configured scenario; returns the per-step log and its summary.

    Raises :class:`SimulationError` with the step index and last plant state
    if the QP solver fails or the plant state stops being finite.
    """
    params = config.params
    spec = config.ocp
    scen = config.scenario
    plant = QuadrotorPlantModel(params)
    duration = config.run_duration
    dt_ctrl = 1.0 / config.control_rate
    n_steps = int(round(duration * config.control_rate))
    h_sub = dt_ctrl / config.plant_substeps
    rng = np.random.default_rng(config.seed) if config.noise_enabled else None

    x_plant = config.resolve_initial_state()
    traj = cold_start_trajectory(reduce_state(x_plant), spec)

    rows = n_steps + 1
    log = SimLog(
        t=np.zeros(rows), state=np.zeros((rows, qm.NX_FULL)),
        ref_state=np.zeros((rows, qm.NX)), u=np.zeros((rows, 4)),
        wrench=np.zeros((rows, 4)), qp_status=[], kkt=np.zeros(rows),
        qp_iterations=np.zeros(rows, dtype=int), prepare_s=np.zeros(rows),
        feedback_s=np.zeros(rows), total_s=np.zeros(rows),
    )
    bound_violations = 0

    for k in range(rows):
        t = k * dt_ctrl
        meas = x_plant.copy()
        rate_noise = np.zeros(3)
        if rng is not None:
            meas[qm.POS] += rng.normal(0.0, config.noise_pos_std, size=3)
            rate_noise = rng.normal(0.0, config.noise_rate_std, size=3)
        x0 = reduce_state(meas)
        ref = window(scen, t, spec.N, spec.dt, params)

        if k > 0:
            traj = shift(traj, spec) if config.warm_start else cold_start_trajectory(x0, spec)
        try:
            sol = rti_step(x0, ref, traj, spec)
        except Exception as exc:
            raise SimulationError(
                f"solver failed at step {k} (t={t:.3f}s): {exc}", step=k, state=x_plant
            ) from exc
        if sol.qp_status != OPTIMAL:
            raise SimulationError(
                f"QP reported '{sol.qp_status}' at step {k} (t={t:.3f}s)",
                step=k, state=x_plant,
            )
        traj = sol.trajectory

        u_apply, violated = clamp_and_check_bounds(sol.u0, spec.u_lb, spec.u_ub)
        if np.any(np.abs(u_apply - sol.u0) > 1e-9):
            bound_violations += 1

        x_d, _ = sample(scen, t, params)
        tau0 = rate_inner_loop(u_apply[1:], x_plant[qm.OMEGA] + rate_noise,
                               params, config.rate_gains)
        log.t[k] = t
        log.state[k] = x_plant
        log.ref_state[k] = x_d
        log.u[k] = u_apply
        log.wrench[k] = np.concatenate([[u_apply[0]], tau0])
        log.qp_status.append(sol.qp_status)
        log.kkt[k] = sol.kkt_residual
        log.qp_iterations[k] = sol.qp_iterations
        log.prepare_s[k] = sol.timings["prepare_s"]
        log.feedback_s[k] = sol.timings["feedback_s"]
        log.total_s[k] = sol.timings["total_s"]

        if k == n_steps:
            break
        try:
            for _ in range(config.plant_substeps):
                tau = rate_inner_loop(u_apply[1:], x_plant[qm.OMEGA] + rate_noise,
                                      params, config.rate_gains)
                wrench = np.concatenate([[u_apply[0]], tau])
                x_plant = rk4_step(plant, x_plant, wrench, h_sub)
        except Exception as exc:
            raise SimulationError(
                f"plant state diverged during step {k}: {exc}", step=k, state=x_plant
            ) from exc
        if not np.all(np.isfinite(x_plant)):
            raise SimulationError(
                f"plant state diverged during step {k}", step=k, state=x_plant
            )
        x_plant[qm.QUAT] = quat_normalize(x_plant[qm.QUAT])

    summary = summarize(log, config, bound_violations)
    return log, summary


def summarize(log: SimLog, config: SimConfig, bound_violations: int = 0) -> RunSummary:
    err = log.position_error()
    duration = log.t[-1] if log.rows else 0.0
    cut = min(config.transient_cut, duration)
    tail = err[log.t >= cut] if log.rows else err
    times = log.total_s
    failures = sum(1 for s in log.qp_status if s != OPTIMAL)
    return RunSummary(
        rms_pos_error=float(np.sqrt(np.mean(tail**2))),
        max_pos_error=float(np.max(err)),
        settling=settling_times(log, config.settle_tolerance),
        solver_time_mean=float(np.mean(times)),
        solver_time_max=float(np.max(times)),
        solver_time_p50=float(np.percentile(times, 50)),
        solver_time_p90=float(np.percentile(times, 90)),
        solver_time_p99=float(np.percentile(times, 99)),
        prepare_time_mean=float(np.mean(log.prepare_s)),
        feedback_time_mean=float(np.mean(log.feedback_s)),
        mean_kkt=float(np.mean(log.kkt)),
        bound_violations=bound_violations,
        solver_failures=failures,
        rows=log.rows,
    )


def settling_times(log: SimLog, tolerance: float) -> list:
    """Settling report per reference discontinuity.

    A discontinuity is a sample-to-sample reference displacement well beyond
    what the reference velocity explains (4x the trapezoidal estimate), so
    smooth trajectories produce no entries.  For each jump: the time until the
    position error enters the tolerance band and stays inside it through the
    end of the segment (``held``), or ``None`` if it never settles.
    """
    if log.rows < 2:
        return []
    ref = log.ref_state[:, 0:3]
    dp = np.linalg.norm(np.diff(ref, axis=0), axis=1)
    speed = np.linalg.norm(log.ref_state[:, 7:10], axis=1)
    explained = 0.5 * (speed[:-1] + speed[1:]) * np.diff(log.t)
    jumps = np.where(dp > 4.0 * explained + 1e-6)[0] + 1
    segments = list(jumps) + [log.rows]
    out = []
    for si, start in enumerate(jumps):
        end = segments[si + 1]
        err = np.linalg.norm(log.state[start:end, 0:3] - ref[start:end], axis=1)
        inside = err <= tolerance
        settle_idx = None
        for j in range(len(inside)):
            if inside[j] and np.all(inside[j:]):
                settle_idx = j
                break
        out.append({
            "t_step": float(log.t[start]),
            "target": [float(v) for v in ref[start]],
            "settle_time": None if settle_idx is None else float(log.t[start + settle_idx] - log.t[start]),
            "held": settle_idx is not None,
        })
    return out


def emit_outputs(
    log: SimLog,
    summary: RunSummary,
    out_dir,
    include_timing: bool = True,
    make_plots: bool = True,
) -> dict:
    """Write the delimited log, the summary document, and report figures.

    Returns a dict of the written paths.  CSV content is byte-deterministic
    for a fixed run when the timing columns are excluded.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "log.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    paths = {"csv": csv_path, "summary": summary_path}

    columns = CSV_COLUMNS + (TIMING_COLUMNS if include_timing else ())
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for k in range(log.rows):
                row = (
                    [repr(float(log.t[k]))]
                    + [repr(float(v)) for v in log.state[k]]
                    + [repr(float(v)) for v in log.ref_state[k, 0:3]]
                    + [repr(float(v)) for v in log.u[k]]
                    + [log.qp_status[k], repr(float(log.kkt[k]))]
                )
                if include_timing:
                    row += [repr(float(log.prepare_s[k])), repr(float(log.feedback_s[k])),
                            repr(float(log.total_s[k]))]
                writer.writerow(row)
        with open(summary_path, "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise SimulationError(f"failed writing outputs under {out_dir}: {exc}") from exc

    if make_plots:
        from .plots import render_report

        paths["figures"] = render_report(log, out_dir)
    return paths

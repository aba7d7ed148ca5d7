"""Gauss-Newton real-time iterations over the multiple-shooting tracking OCP.

Each control period performs exactly one linearize -> condense -> box-QP ->
expand cycle.  Condensing eliminates the state increments: with
``dx_{k+1} = A_k dx_k + B_k du_k + c_k`` anchored at the measured state, every
state increment is affine in the stacked input increment ``dU``, so the
Gauss-Newton least-squares objective reduces to a dense QP in ``dU`` with the
input box as its only constraint.

The condensed Hessian does not depend on the measured state, and the gradient
is affine in it.  The expensive linearization/condensing work therefore forms
the preparation phase, while anchoring the gradient at the measurement and
solving the small QP forms the feedback phase; both are timed separately.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .integrator import integrate, integrate_with_sensitivities
from .ocp import OcpSpec, ReferenceWindow, clamp_and_check_bounds
from .qp import DenseQp, QpSolution, solve_box_qp


@dataclass
class ShootingTrajectory:
    """State guesses at the N+1 shooting nodes and the N interval inputs."""

    xs: np.ndarray  # (N+1, nx)
    us: np.ndarray  # (N, nu)

    def __post_init__(self):
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        self.us = np.atleast_2d(np.asarray(self.us, dtype=float))
        if self.xs.shape[0] != self.us.shape[0] + 1:
            raise ValueError("need exactly one more shooting state than inputs")
        if not (np.all(np.isfinite(self.xs)) and np.all(np.isfinite(self.us))):
            raise ValueError("non-finite trajectory guess")

    @property
    def N(self) -> int:
        return self.us.shape[0]

    def copy(self) -> "ShootingTrajectory":
        return ShootingTrajectory(self.xs.copy(), self.us.copy())


@dataclass
class StageData:
    """Per-stage linearization around a trajectory guess.

    ``A, B`` are discrete sensitivities of the shooting map, ``c`` the defects
    ``f(x_k, u_k) - x_{k+1}``, and ``r_x, r_us`` the tracking residuals at the
    linearization point (reference quaternions hemisphere-aligned).
    """

    xs: np.ndarray
    us: np.ndarray
    A: np.ndarray  # (N, nx, nx)
    B: np.ndarray  # (N, nx, nu)
    c: np.ndarray  # (N, nx)
    r_x: np.ndarray  # (N+1, nx), terminal residual in the last row
    r_u: np.ndarray  # (N, nu)


@dataclass
class CondensedQp:
    """Condensed QP with the measurement-dependent part kept symbolic.

    The dense QP for a measured state ``x0`` is ``H`` with gradient
    ``g_const + K (x0 - xs[0])`` and the input box shifted by the current
    input guesses.  ``G`` and ``e`` recover the state increments from the
    input increment.
    """

    H: np.ndarray
    g_const: np.ndarray
    K: np.ndarray  # gradient sensitivity to the initial-state increment
    lb: np.ndarray
    ub: np.ndarray
    G: np.ndarray  # (N+1, nx, N*nu) state increments per input increment
    Phi: np.ndarray  # (N+1, nx, nx) state increments per initial-state increment
    d: np.ndarray  # (N+1, nx) state increments from accumulated defects


@dataclass
class RtiSolution:
    """Result of one real-time iteration."""

    u0: np.ndarray
    trajectory: ShootingTrajectory
    qp_status: str
    kkt_residual: float
    qp_iterations: int
    timings: dict


def cold_start_trajectory(x0: np.ndarray, spec: OcpSpec) -> ShootingTrajectory:
    """All shooting states at the measured state, all inputs neutral."""
    xs = np.tile(np.asarray(x0, dtype=float), (spec.N + 1, 1))
    us = np.tile(spec.model.neutral_input(), (spec.N, 1))
    return ShootingTrajectory(xs, us)


def linearize(traj: ShootingTrajectory, ref: ReferenceWindow, spec: OcpSpec) -> StageData:
    """Sensitivities, defects, and tracking residuals around ``traj``."""
    N = spec.N
    if traj.N != N or ref.N != N:
        raise ValueError("trajectory/reference horizon does not match the OCP")
    sens = integrate_with_sensitivities(
        spec.model, traj.xs[:N], traj.us, spec.dt, spec.n_rk4_steps
    )
    c = sens.x_next - traj.xs[1:]

    ref_states = ref.states.copy()
    qs = spec.model.quat_slice
    if qs is not None:
        flip = np.sum(ref_states[:, qs] * traj.xs[:, qs], axis=-1) < 0.0
        ref_states[flip, qs] = -ref_states[flip, qs]
    r_x = traj.xs - ref_states
    r_u = traj.us - ref.inputs
    return StageData(
        xs=traj.xs, us=traj.us, A=sens.S_x, B=sens.S_u, c=c, r_x=r_x, r_u=r_u
    )


def build_condensing(stage: StageData, spec: OcpSpec) -> CondensedQp:
    """Forward-propagate the stage linearization into the dense input-space QP."""
    N = stage.us.shape[0]
    nx, nu = spec.model.nx, spec.model.nu
    m = N * nu
    Wx, Wu, WN = spec.W_state, spec.W_input, spec.W_N

    G = np.zeros((N + 1, nx, m))
    Phi = np.zeros((N + 1, nx, nx))
    d = np.zeros((N + 1, nx))
    Phi[0] = np.eye(nx)
    for k in range(N):
        G[k + 1] = stage.A[k] @ G[k]
        G[k + 1][:, k * nu:(k + 1) * nu] += stage.B[k]
        Phi[k + 1] = stage.A[k] @ Phi[k]
        d[k + 1] = stage.A[k] @ d[k] + stage.c[k]

    # Stage weights on nodes 0..N-1, terminal weight on node N.
    Wdiag = np.concatenate([np.tile(Wx, (N, 1)), WN[None, :]], axis=0)
    WG = Wdiag[:, :, None] * G
    H = np.tensordot(G, WG, axes=([0, 1], [0, 1]))
    for k in range(N):
        H[k * nu:(k + 1) * nu, k * nu:(k + 1) * nu] += np.diag(Wu)
    H = 0.5 * (H + H.T)

    w_res = Wdiag * (stage.r_x + d)
    g_const = np.tensordot(G, w_res, axes=([0, 1], [0, 1]))
    g_const += (Wu * stage.r_u).reshape(m)
    K = np.tensordot(G, Wdiag[:, :, None] * Phi, axes=([0, 1], [0, 1]))

    lb = (spec.u_lb - stage.us).reshape(m)
    ub = (spec.u_ub - stage.us).reshape(m)
    return CondensedQp(H=H, g_const=g_const, K=K, lb=lb, ub=ub, G=G, Phi=Phi, d=d)


def condense(stage: StageData, x0: np.ndarray, spec: OcpSpec) -> DenseQp:
    """Dense box QP over the stacked input increment, anchored at ``x0``."""
    cq = build_condensing(stage, spec)
    b0 = np.asarray(x0, dtype=float) - stage.xs[0]
    return DenseQp(H=cq.H, g=cq.g_const + cq.K @ b0, lb=cq.lb, ub=cq.ub)


def expand(cq: CondensedQp, stage: StageData, dU: np.ndarray, b0: np.ndarray) -> ShootingTrajectory:
    """Recover the updated trajectory from the condensed QP solution."""
    dx = cq.Phi @ b0 + cq.d + cq.G @ dU
    nu = stage.us.shape[1]
    return ShootingTrajectory(stage.xs + dx, stage.us + dU.reshape(-1, nu))


def stationarity_residual(cq: CondensedQp, stage: StageData, b0: np.ndarray) -> float:
    """KKT measure at the linearization point: projected reduced gradient,
    shooting defects, and the initial-state anchor mismatch."""
    grad = cq.g_const + cq.K @ b0
    pg = grad.copy()
    at_lb = cq.lb >= -1e-12
    at_ub = cq.ub <= 1e-12
    pg[at_lb] = np.minimum(grad[at_lb], 0.0)
    pg[at_ub] = np.maximum(grad[at_ub], 0.0)
    terms = [np.max(np.abs(pg), initial=0.0), np.max(np.abs(b0), initial=0.0)]
    if stage.c.size:
        terms.append(np.max(np.abs(stage.c)))
    return float(max(terms))


def rti_step(
    x0: np.ndarray,
    ref: ReferenceWindow,
    traj: ShootingTrajectory,
    spec: OcpSpec,
    qp_warm_start: np.ndarray | None = None,
) -> RtiSolution:
    """One real-time iteration: full Newton-type step, no globalization.

    The returned first input always satisfies the input box.  A QP iteration
    cap is reported through ``qp_status``; the best iterate is still applied
    and the caller decides whether to keep flying.
    """
    t0 = time.perf_counter()
    stage = linearize(traj, ref, spec)
    cq = build_condensing(stage, spec)
    t1 = time.perf_counter()

    b0 = np.asarray(x0, dtype=float) - stage.xs[0]
    qp = DenseQp(H=cq.H, g=cq.g_const + cq.K @ b0, lb=cq.lb, ub=cq.ub)
    qp_sol: QpSolution = solve_box_qp(qp, warm_start=qp_warm_start)
    new_traj = expand(cq, stage, qp_sol.z, b0)
    u0, _ = clamp_and_check_bounds(new_traj.us[0], spec.u_lb, spec.u_ub)
    kkt = stationarity_residual(cq, stage, b0)
    t2 = time.perf_counter()

    return RtiSolution(
        u0=u0,
        trajectory=new_traj,
        qp_status=qp_sol.status,
        kkt_residual=kkt,
        qp_iterations=qp_sol.iterations,
        timings={"prepare_s": t1 - t0, "feedback_s": t2 - t1, "total_s": t2 - t0},
    )


def shift(traj: ShootingTrajectory, spec: OcpSpec) -> ShootingTrajectory:
    """Advance the horizon one interval: drop the first node, duplicate the
    last input, and integrate a fresh terminal node."""
    xs = np.empty_like(traj.xs)
    us = np.empty_like(traj.us)
    xs[:-1] = traj.xs[1:]
    us[:-1] = traj.us[1:]
    us[-1] = traj.us[-1]
    xs[-1] = integrate(spec.model, xs[-2], us[-1], spec.dt, spec.n_rk4_steps)
    return ShootingTrajectory(xs, us)


def solve_to_convergence(
    x0: np.ndarray,
    ref: ReferenceWindow,
    traj: ShootingTrajectory,
    spec: OcpSpec,
    tol: float = 1e-4,
    max_iter: int = 200,
) -> tuple[ShootingTrajectory, int, float]:
    """Repeat real-time iterations at a frozen state until the KKT residual
    drops below ``tol``; offline use only.

    Returns the final trajectory, the number of iterations performed, and the
    last KKT residual.
    """
    kkt = np.inf
    for it in range(1, max_iter + 1):
        sol = rti_step(x0, ref, traj, spec)
        traj = sol.trajectory
        kkt = sol.kkt_residual
        if kkt <= tol:
            return traj, it, kkt
    return traj, max_iter, kkt

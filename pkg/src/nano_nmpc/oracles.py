"""Independent verification oracles.

Each oracle checks a fast production path against a slow, structurally
different computation: analytic model Jacobians against central finite
differences, the interior-point QP against brute-force enumeration of bound
activity patterns, and the condensed QP against a directly assembled sparse
KKT system.  The ``check`` CLI subcommand runs all suites.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import NU, NX, VehicleParams, jacobians_reduced, dynamics_reduced, quat_normalize
from .ocp import OcpSpec, ReferenceWindow, default_ocp_spec
from .qp import DenseQp, solve_box_qp
from .solver import ShootingTrajectory, StageData, build_condensing, linearize


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str


# ---------------------------------------------------------------------------
# Jacobians vs central finite differences
# ---------------------------------------------------------------------------

def finite_difference_jacobians(f, x, u, h: float = 1e-6):
    """Central-difference Jacobians of ``f(x, u)`` w.r.t. both arguments."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    fx0 = np.asarray(f(x, u))
    A = np.zeros((fx0.shape[0], x.shape[0]))
    B = np.zeros((fx0.shape[0], u.shape[0]))
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        A[:, i] = (f(x + e, u) - f(x - e, u)) / (2.0 * h)
    for i in range(u.shape[0]):
        e = np.zeros_like(u)
        e[i] = h
        B[:, i] = (f(x, u + e) - f(x, u - e)) / (2.0 * h)
    return A, B


def random_reduced_state(rng: np.random.Generator) -> np.ndarray:
    x = np.zeros(NX)
    x[0:3] = rng.normal(0.0, 1.0, size=3)
    x[3:7] = quat_normalize(rng.normal(0.0, 1.0, size=4))
    x[7:10] = rng.normal(0.0, 1.0, size=3)
    return x


def random_input(rng: np.random.Generator, params: VehicleParams) -> np.ndarray:
    u = np.zeros(NU)
    u[0] = rng.uniform(0.0, 2.0 * params.hover_thrust)
    u[1:] = rng.uniform(-4.0 * np.pi, 4.0 * np.pi, size=3)
    return u


def check_jacobians(
    n_samples: int = 100, seed: int = 2024, tol: float = 1e-5,
    params: VehicleParams | None = None,
) -> OracleResult:
    """Analytic (A, B) vs central finite differences at random states."""
    params = params or VehicleParams()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = random_reduced_state(rng)
        u = random_input(rng, params)
        A, B = jacobians_reduced(x, u, params)
        A_fd, B_fd = finite_difference_jacobians(
            lambda xx, uu: dynamics_reduced(xx, uu, params), x, u
        )
        rel_a = np.max(np.abs(A - A_fd) / np.maximum(1.0, np.abs(A)))
        rel_b = np.max(np.abs(B - B_fd) / np.maximum(1.0, np.abs(B)))
        worst = max(worst, float(rel_a), float(rel_b))
    return OracleResult(
        "jacobian-finite-difference", worst <= tol,
        f"max relative deviation {worst:.3e} over {n_samples} samples (tol {tol:g})",
    )


# ---------------------------------------------------------------------------
# Box QP vs active-set enumeration
# ---------------------------------------------------------------------------

def enumerate_box_qp(H, g, lb, ub, tol: float = 1e-9) -> np.ndarray:
    """Global box-QP minimizer by enumerating all 3^n bound-activity patterns.

    For each pattern the bound-fixed coordinates are pinned, the free block is
    solved exactly, and primal feasibility plus multiplier signs are checked.
    Intended for n <= ~8.
    """
    n = g.shape[0]
    best = None
    best_obj = np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pat = np.asarray(pattern)
        z = np.where(pat == 1, lb, np.where(pat == 2, ub, 0.0))
        free = pat == 0
        if np.any(free):
            Hff = H[np.ix_(free, free)]
            rhs = -(g[free] + H[np.ix_(free, ~free)] @ z[~free])
            try:
                z[free] = np.linalg.solve(Hff, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(z[free] < lb[free] - tol) or np.any(z[free] > ub[free] + tol):
                continue
        r = H @ z + g
        if np.any(r[pat == 1] < -tol) or np.any(r[pat == 2] > tol):
            continue
        obj = 0.5 * z @ H @ z + g @ z
        if obj < best_obj:
            best_obj = obj
            best = np.clip(z, lb, ub)
    if best is None:
        raise RuntimeError("enumeration found no KKT point")
    return best


def random_box_qp(rng: np.random.Generator, n: int) -> DenseQp:
    """Random strictly convex instance with eigenvalues in [0.5, ~5]."""
    M = rng.normal(0.0, 1.0, size=(n, n))
    H = M @ M.T / n + 0.5 * np.eye(n)
    g = rng.normal(0.0, 2.0, size=n)
    lb = rng.uniform(-2.0, 0.0, size=n)
    ub = lb + rng.uniform(0.5, 3.0, size=n)
    return DenseQp(H=H, g=g, lb=lb, ub=ub)


def check_qp_solver(
    n_instances: int = 200, seed: int = 77, tol: float = 1e-6, n_max: int = 8
) -> OracleResult:
    """Interior-point solutions vs enumeration on random SPD instances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    infeasible = 0
    for _ in range(n_instances):
        n = int(rng.integers(1, n_max + 1))
        qp = random_box_qp(rng, n)
        sol = solve_box_qp(qp)
        if sol.status != "optimal":
            return OracleResult("qp-enumeration", False, f"solver returned {sol.status}")
        if np.any(sol.z < qp.lb) or np.any(sol.z > qp.ub):
            infeasible += 1
        z_ref = enumerate_box_qp(qp.H, qp.g, qp.lb, qp.ub)
        worst = max(worst, float(np.max(np.abs(sol.z - z_ref))))
    ok = worst <= tol and infeasible == 0
    return OracleResult(
        "qp-enumeration", ok,
        f"max deviation {worst:.3e} over {n_instances} instances, "
        f"{infeasible} bound violations (tol {tol:g})",
    )


# ---------------------------------------------------------------------------
# Condensing vs sparse KKT system
# ---------------------------------------------------------------------------

def sparse_kkt_solution(stage: StageData, x0: np.ndarray, spec: OcpSpec):
    """Equality-constrained horizon QP solved on the full sparse variable set.

    Builds the stacked KKT system over all state and input increments with
    the shooting equalities and solves it densely.  Returns the input and
    state increments; valid as a reference when no input bound is active.
    """
    N = stage.us.shape[0]
    nx, nu = spec.model.nx, spec.model.nu
    nv = (N + 1) * nx + N * nu
    nc = (N + 1) * nx

    Qdiag = np.concatenate([np.tile(spec.W_state, N), spec.W_N, np.tile(spec.W_input, N)])
    q = np.concatenate([
        (spec.W_state * stage.r_x[:N]).reshape(-1),
        spec.W_N * stage.r_x[N],
        (spec.W_input * stage.r_u).reshape(-1),
    ])

    E = np.zeros((nc, nv))
    h = np.zeros(nc)
    E[0:nx, 0:nx] = np.eye(nx)
    h[0:nx] = np.asarray(x0, dtype=float) - stage.xs[0]
    for k in range(N):
        row = (k + 1) * nx
        E[row:row + nx, k * nx:(k + 1) * nx] = stage.A[k]
        E[row:row + nx, (k + 1) * nx:(k + 2) * nx] = -np.eye(nx)
        E[row:row + nx, (N + 1) * nx + k * nu:(N + 1) * nx + (k + 1) * nu] = stage.B[k]
        h[row:row + nx] = -stage.c[k]

    KKT = np.zeros((nv + nc, nv + nc))
    KKT[:nv, :nv] = np.diag(Qdiag)
    KKT[:nv, nv:] = E.T
    KKT[nv:, :nv] = E
    rhs = np.concatenate([-q, h])
    sol = np.linalg.solve(KKT, rhs)
    dx = sol[: (N + 1) * nx].reshape(N + 1, nx)
    du = sol[(N + 1) * nx: nv].reshape(N, nu)
    return dx, du


def random_condensing_instance(rng: np.random.Generator, params: VehicleParams, N: int):
    """Perturbed-hover trajectory, reference, and measured state for one test."""
    spec = default_ocp_spec(params, N=N)
    xs = np.zeros((N + 1, NX))
    for k in range(N + 1):
        xs[k] = random_reduced_state(rng) * 0.3
        xs[k, 3:7] = quat_normalize(np.array([1.0, 0, 0, 0]) + 0.1 * rng.normal(size=4))
    us = np.tile(spec.model.neutral_input(), (N, 1)) + 0.05 * rng.normal(size=(N, NU))
    traj = ShootingTrajectory(xs, us)
    states = np.zeros((N + 1, NX))
    for k in range(N + 1):
        states[k] = random_reduced_state(rng) * 0.2
        states[k, 3:7] = quat_normalize(np.array([1.0, 0, 0, 0]) + 0.05 * rng.normal(size=4))
    ref = ReferenceWindow(states=states, inputs=np.tile(spec.model.neutral_input(), (N, 1)))
    x0 = xs[0] + 0.05 * rng.normal(size=NX)
    x0[3:7] = quat_normalize(x0[3:7])
    return spec, traj, ref, x0


def check_condensing(
    n_instances: int = 20, seed: int = 5150, tol: float = 1e-8, n_max: int = 5,
    params: VehicleParams | None = None,
) -> OracleResult:
    """Condensed-QP optimum vs the sparse KKT solve with bounds inactive."""
    params = params or VehicleParams()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        N = int(rng.integers(1, n_max + 1))
        spec, traj, ref, x0 = random_condensing_instance(rng, params, N)
        stage = linearize(traj, ref, spec)
        cq = build_condensing(stage, spec)
        b0 = x0 - stage.xs[0]
        # Bounds widened so the reference equality-constrained solve applies.
        wide = 1e6 * np.ones_like(cq.lb)
        qp = DenseQp(H=cq.H, g=cq.g_const + cq.K @ b0, lb=-wide, ub=wide)
        sol = solve_box_qp(qp)
        dx_ref, du_ref = sparse_kkt_solution(stage, x0, spec)
        dev = np.max(np.abs(sol.z - du_ref.reshape(-1)))
        dx_cond = cq.Phi @ b0 + cq.d + cq.G @ sol.z
        dev = max(dev, np.max(np.abs(dx_cond - dx_ref)))
        worst = max(worst, float(dev))
    return OracleResult(
        "condensing-sparse-kkt", worst <= tol,
        f"max deviation {worst:.3e} over {n_instances} instances (tol {tol:g})",
    )


def run_all_checks(fast: bool = False) -> list[OracleResult]:
    n_jac = 30 if fast else 100
    n_qp = 50 if fast else 200
    n_cond = 8 if fast else 20
    return [
        check_jacobians(n_samples=n_jac),
        check_qp_solver(n_instances=n_qp),
        check_condensing(n_instances=n_cond),
    ]

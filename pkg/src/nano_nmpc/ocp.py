"""Tracking OCP definition: weights, bounds, residuals, reference windows.

The stage residual is the plain stacked difference
``(x - x_ref, u - u_ref)`` weighted by a diagonal matrix; the terminal
residual drops the input block.  Quaternion components enter the residual
directly (componentwise) after hemisphere alignment, which resolves the
double cover: ``q`` and ``-q`` encode the same attitude, so the reference is
flipped onto the hemisphere of the current quaternion before subtracting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import model as qm
from .integrator import IntegratorConfig
from .model import QuadrotorReducedModel, VehicleParams

RATE_LIMIT = 4.0 * np.pi

# Position-dominant tracking weights: position, quaternion, velocity, then
# thrust and body-rate inputs.  Position weight is sized so a 1.3 m setpoint
# drop settles into a 5 cm band within one second under the stock thrust box.
DEFAULT_STAGE_WEIGHTS = (25.0, 25.0, 25.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
                         0.1, 0.1, 0.1, 0.1)
TERMINAL_WEIGHT_SCALE = 10.0


@dataclass
class OcpSpec:
    """Shooting problem data: model, horizon, diagonal weights, input box.

    ``W`` holds the stage weight diagonal over ``(state, input)``; ``W_N`` the
    terminal weight diagonal over the state alone.  Immutable by convention
    once handed to a solver.
    """

    model: object
    N: int = 10
    dt: float = 0.1
    W: np.ndarray = None
    W_N: np.ndarray = None
    u_lb: np.ndarray = None
    u_ub: np.ndarray = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("horizon must be >= 1")
        if self.dt <= 0:
            raise ValueError("shooting interval must be positive")
        self.W = np.asarray(self.W, dtype=float)
        self.W_N = np.asarray(self.W_N, dtype=float)
        self.u_lb = np.asarray(self.u_lb, dtype=float)
        self.u_ub = np.asarray(self.u_ub, dtype=float)
        nx, nu = self.model.nx, self.model.nu
        if self.W.shape != (nx + nu,) or self.W_N.shape != (nx,):
            raise ValueError("weight diagonals must match state/input sizes")
        if np.any(self.W < 0) or np.any(self.W_N < 0):
            raise ValueError("weights must be nonnegative")
        if self.u_lb.shape != (nu,) or self.u_ub.shape != (nu,):
            raise ValueError("input bounds must match the input size")
        if np.any(self.u_lb >= self.u_ub):
            raise ValueError("require u_lb < u_ub componentwise")

    @property
    def W_state(self) -> np.ndarray:
        return self.W[: self.model.nx]

    @property
    def W_input(self) -> np.ndarray:
        return self.W[self.model.nx:]

    @property
    def n_rk4_steps(self) -> int:
        return self.integrator.n_steps


def default_ocp_spec(params: VehicleParams, *, N: int = 10, dt: float = 0.1,
                     W=None, W_N=None, u_lb=None, u_ub=None,
                     n_rk4_steps: int = 3) -> OcpSpec:
    """OcpSpec with the stock tracking weights and thrust/rate box for ``params``.

    Thrust is bounded by [0, 2 m g] (twice hover) and each body-rate command
    by +-4 pi rad/s.
    """
    W = np.asarray(DEFAULT_STAGE_WEIGHTS if W is None else W, dtype=float)
    if W_N is None:
        W_N = TERMINAL_WEIGHT_SCALE * W[: qm.NX]
    if u_lb is None:
        u_lb = np.array([0.0, -RATE_LIMIT, -RATE_LIMIT, -RATE_LIMIT])
    if u_ub is None:
        u_ub = np.array([2.0 * params.hover_thrust, RATE_LIMIT, RATE_LIMIT, RATE_LIMIT])
    return OcpSpec(
        model=QuadrotorReducedModel(params), N=N, dt=dt, W=W, W_N=np.asarray(W_N, dtype=float),
        u_lb=np.asarray(u_lb, dtype=float), u_ub=np.asarray(u_ub, dtype=float),
        integrator=IntegratorConfig(n_steps=n_rk4_steps),
    )


@dataclass
class ReferenceWindow:
    """N+1 reference states and N reference inputs over one horizon."""

    states: np.ndarray  # (N+1, nx)
    inputs: np.ndarray  # (N, nu)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise ValueError("need exactly one more reference state than inputs")

    @property
    def N(self) -> int:
        return self.inputs.shape[0]


def stage_cost(x, u, ref_x, ref_u, W) -> float:
    """0.5 * || (x - ref_x, u - ref_u) ||^2 under the diagonal weight ``W``."""
    r = np.concatenate([np.asarray(x) - ref_x, np.asarray(u) - ref_u])
    W = np.asarray(W, dtype=float)
    if W.shape != r.shape:
        raise ValueError("weight diagonal does not match residual size")
    return 0.5 * float(r @ (W * r))


def terminal_cost(x, ref_x, W_N) -> float:
    """0.5 * || x - ref_x ||^2 under the diagonal weight ``W_N``."""
    r = np.asarray(x) - ref_x
    W_N = np.asarray(W_N, dtype=float)
    if W_N.shape != r.shape:
        raise ValueError("weight diagonal does not match residual size")
    return 0.5 * float(r @ (W_N * r))


def clamp_and_check_bounds(u, u_lb, u_ub) -> tuple[np.ndarray, bool]:
    """Componentwise clamp of ``u`` to the box; flags whether anything moved."""
    u = np.asarray(u, dtype=float)
    clamped = np.clip(u, u_lb, u_ub)
    return clamped, bool(np.any(clamped != u))


def hemisphere_align(ref_q: np.ndarray, current_q: np.ndarray) -> np.ndarray:
    """Flip ``ref_q`` to the hemisphere of ``current_q``.

    Returns ``-ref_q`` iff their dot product is strictly negative, so the
    componentwise quaternion residual measures the short way around.  Ties
    (orthogonal quaternions) leave the reference unchanged.
    """
    ref_q = np.asarray(ref_q, dtype=float)
    if float(np.dot(ref_q, current_q)) < 0.0:
        return -ref_q
    return ref_q

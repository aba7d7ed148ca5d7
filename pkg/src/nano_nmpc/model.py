"""Quadrotor rigid-body dynamics in quaternion coordinates.

Conventions used throughout the package:

* World frame is North-West-Up; gravity acts along -z.
* Quaternions are scalar-first ``(qw, qx, qy, qz)``, unit norm, and rotate
  body vectors into the world frame.  The identity attitude is ``(1, 0, 0, 0)``.
* The full plant state has 13 components
  ``(x, y, z, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz)`` with velocity in the
  world frame and angular rate in the body frame.  It is driven by a wrench
  ``(T, tau_x, tau_y, tau_z)``: collective thrust along body z plus body torques.
* The reduced prediction model keeps the first 10 components and is driven by
  ``(T, wx, wy, wz)``: collective thrust plus commanded body rates.

All dynamics functions broadcast over leading axes, so a batch of states of
shape ``(n, 10)`` evaluates in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError

# Reduced state layout (x, y, z, qw, qx, qy, qz, vx, vy, vz).
NX = 10
NU = 4
POS = slice(0, 3)
QUAT = slice(3, 7)
VEL = slice(7, 10)
# Extra block of the full 13-state plant.
NX_FULL = 13
OMEGA = slice(10, 13)


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters of the vehicle (defaults: Crazyflie 2.1 class frame).

    Attributes:
        m: mass [kg]
        J: diagonal inertia (Jx, Jy, Jz) [kg m^2]
        l: prop-to-prop length [m]
        k_t: rotor thrust coefficient [N s^2/rad^2]
        k_d: rotor drag (yaw moment) coefficient [N m s^2]
        g: gravity magnitude [m/s^2]
    """

    m: float = 0.042
    J: tuple[float, float, float] = (1.6571e-5, 1.6571e-5, 2.92e-5)
    l: float = 0.092
    k_t: float = 2.88e-8
    k_d: float = 7.24e-10
    g: float = 9.81

    def __post_init__(self):
        if not (self.m > 0 and all(j > 0 for j in self.J)):
            raise InvalidInputError("mass and inertia must be positive")
        if not (self.k_t > 0 and self.k_d > 0 and self.g > 0 and self.l > 0):
            raise InvalidInputError("geometry and aero coefficients must be positive")

    @property
    def J_diag(self) -> np.ndarray:
        return np.asarray(self.J, dtype=float)

    @property
    def hover_thrust(self) -> float:
        return self.m * self.g


def hover_input(params: VehicleParams) -> np.ndarray:
    """Input that holds the reduced model at rest: hover thrust, zero rates."""
    return np.array([params.hover_thrust, 0.0, 0.0, 0.0])


def hover_state(position=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Reduced state at rest at ``position`` with identity attitude."""
    x = np.zeros(NX)
    x[POS] = position
    x[3] = 1.0
    return x


def full_state(position=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Full 13-state at rest at ``position`` with identity attitude."""
    x = np.zeros(NX_FULL)
    x[POS] = position
    x[3] = 1.0
    return x


def reduce_state(x_full: np.ndarray) -> np.ndarray:
    """Project the full plant state onto the 10-state prediction model.

    The quaternion is renormalized, since the prediction side requires a unit
    quaternion while the plant accumulates integration drift.
    """
    x = np.array(x_full[:NX], dtype=float)
    x[QUAT] = quat_normalize(x[QUAT])
    return x


# ---------------------------------------------------------------------------
# Quaternion algebra (Hamilton product, scalar-first)
# ---------------------------------------------------------------------------

def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product q1 * q2, broadcasting over leading axes."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    w1, x1, y1, z1 = q1[..., 0], q1[..., 1], q1[..., 2], q1[..., 3]
    w2, x2, y2, z2 = q2[..., 0], q2[..., 1], q2[..., 2], q2[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegenerateInputError("cannot normalize a zero quaternion")
    return q / norm


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector ``v`` by quaternion ``q``: vector part of q * (0, v) * conj(q)."""
    v = np.asarray(v, dtype=float)
    qv = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
    return quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[..., 1:]


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Direction-cosine matrix of ``q`` (body-to-world), shape (..., 3, 3)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    row0 = np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1)
    row1 = np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1)
    row2 = np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def _require_finite(name: str, *arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidInputError(f"non-finite components in {name}")


# ---------------------------------------------------------------------------
# Continuous-time dynamics
# ---------------------------------------------------------------------------

def dynamics_reduced(x: np.ndarray, u: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Time derivative of the 10-state rate-input model.

    The attitude kinematics treat the commanded body rates as the actual body
    rates; the quaternion derivative is ``0.5 * q (x) (0, w)`` written out
    componentwise, and the translational acceleration is the thrust direction
    (third column of the attitude DCM) scaled by T/m, minus gravity on z.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _require_finite("state", x)
    _require_finite("input", u)

    qw, qx, qy, qz = x[..., 3], x[..., 4], x[..., 5], x[..., 6]
    T = u[..., 0]
    wx, wy, wz = u[..., 1], u[..., 2], u[..., 3]
    a = T / params.m

    return np.stack(
        [
            x[..., 7],
            x[..., 8],
            x[..., 9],
            0.5 * (-wx * qx - wy * qy - wz * qz),
            0.5 * (wx * qw + wz * qy - wy * qz),
            0.5 * (wy * qw - wz * qx + wx * qz),
            0.5 * (wz * qw + wy * qx - wx * qy),
            2.0 * (qw * qy + qx * qz) * a,
            2.0 * (qy * qz - qw * qx) * a,
            (1.0 - 2.0 * qx * qx - 2.0 * qy * qy) * a - params.g,
        ],
        axis=-1,
    )


def jacobians_reduced(
    x: np.ndarray, u: np.ndarray, params: VehicleParams
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form Jacobians (A, B) of :func:`dynamics_reduced`.

    Returns ``A`` of shape (..., 10, 10) and ``B`` of shape (..., 10, 4) in the
    fixed state/input ordering.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _require_finite("state", x)
    _require_finite("input", u)

    batch = x.shape[:-1]
    qw, qx, qy, qz = x[..., 3], x[..., 4], x[..., 5], x[..., 6]
    T = u[..., 0]
    wx, wy, wz = u[..., 1], u[..., 2], u[..., 3]
    a = T / params.m

    A = np.zeros(batch + (NX, NX))
    B = np.zeros(batch + (NX, NU))

    A[..., 0, 7] = 1.0
    A[..., 1, 8] = 1.0
    A[..., 2, 9] = 1.0

    # Attitude kinematics block: d(qdot)/dq.
    A[..., 3, 4] = -0.5 * wx
    A[..., 3, 5] = -0.5 * wy
    A[..., 3, 6] = -0.5 * wz
    A[..., 4, 3] = 0.5 * wx
    A[..., 4, 5] = 0.5 * wz
    A[..., 4, 6] = -0.5 * wy
    A[..., 5, 3] = 0.5 * wy
    A[..., 5, 4] = -0.5 * wz
    A[..., 5, 6] = 0.5 * wx
    A[..., 6, 3] = 0.5 * wz
    A[..., 6, 4] = 0.5 * wy
    A[..., 6, 5] = -0.5 * wx

    # Thrust-direction block: d(vdot)/dq.
    A[..., 7, 3] = 2.0 * qy * a
    A[..., 7, 4] = 2.0 * qz * a
    A[..., 7, 5] = 2.0 * qw * a
    A[..., 7, 6] = 2.0 * qx * a
    A[..., 8, 3] = -2.0 * qx * a
    A[..., 8, 4] = -2.0 * qw * a
    A[..., 8, 5] = 2.0 * qz * a
    A[..., 8, 6] = 2.0 * qy * a
    A[..., 9, 4] = -4.0 * qx * a
    A[..., 9, 5] = -4.0 * qy * a

    # d(qdot)/dw.
    B[..., 3, 1] = -0.5 * qx
    B[..., 3, 2] = -0.5 * qy
    B[..., 3, 3] = -0.5 * qz
    B[..., 4, 1] = 0.5 * qw
    B[..., 4, 2] = -0.5 * qz
    B[..., 4, 3] = 0.5 * qy
    B[..., 5, 1] = 0.5 * qz
    B[..., 5, 2] = 0.5 * qw
    B[..., 5, 3] = -0.5 * qx
    B[..., 6, 1] = -0.5 * qy
    B[..., 6, 2] = 0.5 * qx
    B[..., 6, 3] = 0.5 * qw

    # d(vdot)/dT: thrust direction over mass.
    B[..., 7, 0] = 2.0 * (qw * qy + qx * qz) / params.m
    B[..., 8, 0] = 2.0 * (qy * qz - qw * qx) / params.m
    B[..., 9, 0] = (1.0 - 2.0 * qx * qx - 2.0 * qy * qy) / params.m

    return A, B


def dynamics_full(x: np.ndarray, wrench: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Time derivative of the full 13-state torque-driven rigid body.

    ``wrench`` is ``(T, tau_x, tau_y, tau_z)``.  Angular dynamics are Euler's
    equations with diagonal inertia.
    """
    x = np.asarray(x, dtype=float)
    wrench = np.asarray(wrench, dtype=float)
    _require_finite("state", x)
    _require_finite("wrench", wrench)

    qw, qx, qy, qz = x[..., 3], x[..., 4], x[..., 5], x[..., 6]
    wx, wy, wz = x[..., 10], x[..., 11], x[..., 12]
    T = wrench[..., 0]
    tau = wrench[..., 1:]
    a = T / params.m
    Jx, Jy, Jz = params.J

    return np.stack(
        [
            x[..., 7],
            x[..., 8],
            x[..., 9],
            0.5 * (-wx * qx - wy * qy - wz * qz),
            0.5 * (wx * qw + wz * qy - wy * qz),
            0.5 * (wy * qw - wz * qx + wx * qz),
            0.5 * (wz * qw + wy * qx - wx * qy),
            2.0 * (qw * qy + qx * qz) * a,
            2.0 * (qy * qz - qw * qx) * a,
            (1.0 - 2.0 * qx * qx - 2.0 * qy * qy) * a - params.g,
            (tau[..., 0] - (Jz - Jy) * wy * wz) / Jx,
            (tau[..., 1] - (Jx - Jz) * wz * wx) / Jy,
            (tau[..., 2] - (Jy - Jx) * wx * wy) / Jz,
        ],
        axis=-1,
    )


# ---------------------------------------------------------------------------
# Rotor allocation
# ---------------------------------------------------------------------------

def allocation_matrix(params: VehicleParams) -> np.ndarray:
    """4x4 map from squared rotor speeds to (T, tau_x, tau_y, tau_z).

    X configuration.  Rotor numbering, with body x forward and body y left:
    0 front-left (CW), 1 front-right (CCW), 2 rear-right (CW), 3 rear-left
    (CCW).  Roll/pitch moment arms are half the prop-to-prop length projected
    on each axis, l / (2 sqrt(2)); yaw reaction torque opposes rotor spin.
    """
    arm = params.l / (2.0 * np.sqrt(2.0))
    kt, kd = params.k_t, params.k_d
    return np.array(
        [
            [kt, kt, kt, kt],
            [kt * arm, -kt * arm, -kt * arm, kt * arm],
            [-kt * arm, -kt * arm, kt * arm, kt * arm],
            [kd, -kd, kd, -kd],
        ]
    )


def wrench_from_rotor_speeds(omega_sq: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Wrench produced by squared rotor speeds (rad^2/s^2)."""
    return allocation_matrix(params) @ np.asarray(omega_sq, dtype=float)


def rotor_speeds_from_wrench(wrench: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Squared rotor speeds realizing ``wrench`` (may be negative if infeasible)."""
    return np.linalg.solve(allocation_matrix(params), np.asarray(wrench, dtype=float))


# ---------------------------------------------------------------------------
# Prediction-model objects consumed by the integrator and solver
# ---------------------------------------------------------------------------

class QuadrotorReducedModel:
    """Rate-input prediction model bound to a parameter set.

    Exposes the interface the shooting machinery expects: ``ode``,
    ``jacobians``, sizes, the quaternion block (for reference hemisphere
    alignment), and a neutral input for cold starts.
    """

    nx = NX
    nu = NU
    quat_slice = QUAT

    def __init__(self, params: VehicleParams):
        self.params = params

    def ode(self, x, u):
        return dynamics_reduced(x, u, self.params)

    def jacobians(self, x, u):
        return jacobians_reduced(x, u, self.params)

    def neutral_input(self) -> np.ndarray:
        return hover_input(self.params)


class QuadrotorPlantModel:
    """Full 13-state torque-driven plant bound to a parameter set."""

    nx = NX_FULL
    nu = NU
    quat_slice = QUAT

    def __init__(self, params: VehicleParams):
        self.params = params

    def ode(self, x, wrench):
        return dynamics_full(x, wrench, self.params)

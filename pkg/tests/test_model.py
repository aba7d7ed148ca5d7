import numpy as np
import pytest

import nano_nmpc as nn
from nano_nmpc.errors import DegenerateInputError, InvalidInputError
from nano_nmpc.model import NX, dynamics_full, dynamics_reduced, jacobians_reduced
from nano_nmpc.oracles import random_input, random_reduced_state

Q90X = np.array([np.sqrt(0.5), np.sqrt(0.5), 0.0, 0.0])


def hover_wrench(params):
    return np.array([params.hover_thrust, 0.0, 0.0, 0.0])


class TestFullDynamics:
    def test_hover_equilibrium(self, params):
        x = nn.hover_state()
        xdot = dynamics_full(np.concatenate([x, np.zeros(3)]), hover_wrench(params), params)
        np.testing.assert_allclose(xdot, np.zeros(13), atol=0.0)

    def test_thrust_along_body_z_at_identity(self, params):
        x = nn.hover_state()
        xdot = dynamics_full(np.concatenate([x, np.zeros(3)]), [0.5, 0, 0, 0], params)
        np.testing.assert_allclose(xdot[7:10], [0.0, 0.0, 0.5 / 0.042 - 9.81], rtol=1e-12)

    def test_tilted_thrust_direction_against_dcm(self, params):
        # Independent oracle: rotate e_z with the direction-cosine matrix.
        x = np.concatenate([np.zeros(3), Q90X, np.zeros(3), np.zeros(3)])
        xdot = dynamics_full(x, hover_wrench(params), params)
        w, xq, yq, zq = Q90X
        dcm = np.array([
            [1 - 2 * (yq**2 + zq**2), 2 * (xq * yq - w * zq), 2 * (xq * zq + w * yq)],
            [2 * (xq * yq + w * zq), 1 - 2 * (xq**2 + zq**2), 2 * (yq * zq - w * xq)],
            [2 * (xq * zq - w * yq), 2 * (yq * zq + w * xq), 1 - 2 * (xq**2 + yq**2)],
        ])
        expected = params.g * dcm @ np.array([0, 0, 1.0]) + np.array([0, 0, -params.g])
        np.testing.assert_allclose(xdot[7:10], expected, atol=1e-12)
        np.testing.assert_allclose(xdot[7:10], [0.0, -params.g, -params.g], atol=1e-12)

    def test_non_finite_input_rejected(self, params):
        x = np.concatenate([nn.hover_state(), np.zeros(3)])
        x[0] = np.nan
        with pytest.raises(InvalidInputError):
            dynamics_full(x, hover_wrench(params), params)


class TestReducedDynamics:
    def test_hover_fixed_point_exact(self, params):
        xdot = dynamics_reduced(nn.hover_state(), nn.hover_input(params), params)
        np.testing.assert_allclose(xdot, np.zeros(NX), atol=0.0)

    def test_pure_yaw_rate_rows(self, params):
        xdot = dynamics_reduced(nn.hover_state(), [0.0, 0.0, 0.0, np.pi], params)
        np.testing.assert_allclose(xdot[3:7], [0.0, 0.0, 0.0, np.pi / 2], atol=0.0)
        np.testing.assert_allclose(xdot[[0, 1, 2, 7, 8]], np.zeros(5), atol=0.0)
        assert xdot[9] == pytest.approx(-params.g)

    def test_matches_full_model_at_constant_rates(self, params, rng):
        # With torques chosen so the body rates stay at the commanded values,
        # the full model restricted to (p, q, v) is the reduced model.
        for _ in range(25):
            x = random_reduced_state(rng)
            u = random_input(rng, params)
            J = params.J_diag
            w = u[1:]
            tau = np.cross(w, J * w)  # keeps wdot = 0
            x_full = np.concatenate([x, w])
            full = dynamics_full(x_full, np.concatenate([[u[0]], tau]), params)
            reduced = dynamics_reduced(x, u, params)
            np.testing.assert_allclose(full[:NX], reduced, atol=1e-13)
            np.testing.assert_allclose(full[10:], np.zeros(3), atol=1e-12)

    def test_quaternion_norm_is_first_integral(self, params, rng):
        for _ in range(50):
            x = random_reduced_state(rng)
            u = random_input(rng, params)
            qdot = dynamics_reduced(x, u, params)[3:7]
            assert abs(float(x[3:7] @ qdot)) <= 1e-12

    def test_batched_evaluation_matches_scalar(self, params, rng):
        xs = np.stack([random_reduced_state(rng) for _ in range(7)])
        us = np.stack([random_input(rng, params) for _ in range(7)])
        batched = dynamics_reduced(xs, us, params)
        for i in range(7):
            np.testing.assert_array_equal(batched[i], dynamics_reduced(xs[i], us[i], params))


class TestJacobians:
    def test_hover_thrust_gain(self, params):
        A, B = jacobians_reduced(nn.hover_state(), nn.hover_input(params), params)
        assert B[9, 0] == pytest.approx(1.0 / params.m)
        np.testing.assert_allclose(A[0:3, 7:10], np.eye(3), atol=0.0)

    def test_position_block_is_identity_everywhere(self, params, rng):
        for _ in range(10):
            A, _ = jacobians_reduced(random_reduced_state(rng), random_input(rng, params), params)
            np.testing.assert_allclose(A[0:3, 7:10], np.eye(3), atol=0.0)

    def test_matches_finite_differences(self, params):
        from nano_nmpc.oracles import check_jacobians

        res = check_jacobians(n_samples=100, seed=42, tol=1e-5, params=params)
        assert res.passed, res.detail


class TestAllocation:
    def test_equal_speeds_pure_thrust(self, params):
        c = 1.2e6
        w = nn.wrench_from_rotor_speeds(np.full(4, c), params)
        np.testing.assert_allclose(w, [4 * params.k_t * c, 0, 0, 0], atol=1e-18)

    def test_round_trip_identity(self, params, rng):
        for _ in range(20):
            x = rng.uniform(0.0, 4e6, size=4)
            back = nn.rotor_speeds_from_wrench(nn.wrench_from_rotor_speeds(x, params), params)
            np.testing.assert_allclose(back, x, atol=1e-10 * 4e6)

    def test_hover_rotor_speed(self, params):
        # Algebraic solve of 4 k_t w^2 = m g.
        expected = np.sqrt(params.m * params.g / (4.0 * params.k_t))
        w_sq = nn.rotor_speeds_from_wrench([params.hover_thrust, 0, 0, 0], params)
        np.testing.assert_allclose(np.sqrt(w_sq), np.full(4, expected), rtol=1e-12)
        assert expected == pytest.approx(1891.0, abs=1.0)

    def test_matrix_invertible(self, params):
        gamma = nn.allocation_matrix(params)
        assert np.linalg.matrix_rank(gamma) == 4
        np.testing.assert_allclose(gamma[0], np.full(4, params.k_t), atol=0.0)


class TestQuaternionOps:
    def test_identity_is_neutral(self, rng):
        for _ in range(5):
            q = nn.quat_normalize(rng.normal(size=4))
            np.testing.assert_allclose(nn.quat_multiply([1, 0, 0, 0], q), q, atol=0.0)
            np.testing.assert_allclose(nn.quat_multiply(q, [1, 0, 0, 0]), q, atol=0.0)

    def test_rotate_90_about_x(self):
        np.testing.assert_allclose(nn.quat_rotate(Q90X, [0, 0, 1.0]), [0, -1, 0], atol=1e-15)

    def test_rate_product_matches_kinematics_rows(self, params, rng):
        # The expanded quaternion-rate rows equal 0.5 * q (x) (0, w).
        for _ in range(20):
            q = nn.quat_normalize(rng.normal(size=4))
            w = rng.uniform(-4 * np.pi, 4 * np.pi, size=3)
            x = nn.hover_state()
            x[3:7] = q
            rows = dynamics_reduced(x, np.concatenate([[0.0], w]), params)[3:7]
            product = 0.5 * nn.quat_multiply(q, np.concatenate([[0.0], w]))
            np.testing.assert_allclose(rows, product, atol=1e-15)

    def test_normalize_zero_raises(self):
        with pytest.raises(DegenerateInputError):
            nn.quat_normalize(np.zeros(4))

    def test_conjugate_inverts_rotation(self, rng):
        q = nn.quat_normalize(rng.normal(size=4))
        v = rng.normal(size=3)
        np.testing.assert_allclose(
            nn.quat_rotate(nn.quat_conjugate(q), nn.quat_rotate(q, v)), v, atol=1e-12
        )

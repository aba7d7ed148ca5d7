import numpy as np
import pytest
from linfix import DoubleIntegratorModel, exact_discrete_matrices

import nano_nmpc as nn
from nano_nmpc.integrator import integrate
from nano_nmpc.ocp import OcpSpec, ReferenceWindow, default_ocp_spec
from nano_nmpc.oracles import check_condensing, sparse_kkt_solution
from nano_nmpc.qp import DenseQp
from nano_nmpc.solver import (
    ShootingTrajectory,
    build_condensing,
    cold_start_trajectory,
    condense,
    linearize,
    rti_step,
    shift,
    solve_to_convergence,
)


def linear_spec(N=5, dt=0.1, w_state=(4.0, 1.0), w_input=2.0, w_terminal=(40.0, 10.0),
                bound=50.0):
    return OcpSpec(
        model=DoubleIntegratorModel(), N=N, dt=dt,
        W=np.array([*w_state, w_input]), W_N=np.array(w_terminal),
        u_lb=np.array([-bound]), u_ub=np.array([bound]),
    )


def linear_window(spec, target=(1.0, 0.0)):
    states = np.tile(np.asarray(target, dtype=float), (spec.N + 1, 1))
    inputs = np.zeros((spec.N, 1))
    return ReferenceWindow(states=states, inputs=inputs)


def hover_setup(params, N=10):
    spec = default_ocp_spec(params, N=N)
    x0 = nn.hover_state(position=(0.0, 0.0, 1.0))
    states = np.tile(x0, (N + 1, 1))
    inputs = np.tile(nn.hover_input(params), (N, 1))
    ref = ReferenceWindow(states=states, inputs=inputs)
    traj = ShootingTrajectory(states.copy(), inputs.copy())
    return spec, x0, ref, traj


class TestLinearize:
    def test_feasible_trajectory_zero_defects(self, params, rng):
        spec = default_ocp_spec(params, N=4)
        x = nn.hover_state()
        xs = [x]
        us = np.tile(nn.hover_input(params), (4, 1)) + 0.02 * rng.normal(size=(4, 4))
        for k in range(4):
            xs.append(integrate(spec.model, xs[-1], us[k], spec.dt, spec.n_rk4_steps))
        traj = ShootingTrajectory(np.stack(xs), us)
        ref = ReferenceWindow(
            states=np.tile(x, (5, 1)), inputs=np.tile(nn.hover_input(params), (4, 1))
        )
        stage = linearize(traj, ref, spec)
        assert np.max(np.abs(stage.c)) <= 1e-12

    def test_hover_point_zero_residuals_and_gradient(self, params):
        spec, x0, ref, traj = hover_setup(params)
        stage = linearize(traj, ref, spec)
        assert np.max(np.abs(stage.r_x)) == 0.0
        assert np.max(np.abs(stage.r_u)) == 0.0
        qp = condense(stage, x0, spec)
        assert np.max(np.abs(qp.g)) <= 1e-12

    def test_linear_fixture_exact_matrices(self):
        spec = linear_spec()
        traj = ShootingTrajectory(np.zeros((6, 2)), np.zeros((5, 1)))
        stage = linearize(traj, linear_window(spec), spec)
        A_d, B_d = exact_discrete_matrices(spec.dt)
        for k in range(spec.N):
            np.testing.assert_allclose(stage.A[k], A_d, atol=1e-12)
            np.testing.assert_allclose(stage.B[k], B_d, atol=1e-12)

    def test_reference_hemisphere_alignment(self, params):
        spec, x0, ref, traj = hover_setup(params, N=2)
        flipped = ReferenceWindow(states=ref.states * np.array([1, 1, 1, -1, -1, -1, -1, 1, 1, 1.0]),
                                  inputs=ref.inputs)
        stage = linearize(traj, flipped, spec)
        # Sign-flipped reference quaternions are re-aligned: residuals stay zero.
        assert np.max(np.abs(stage.r_x)) == 0.0


class TestCondense:
    def test_single_interval_hessian_closed_form(self):
        spec = linear_spec(N=1)
        traj = ShootingTrajectory(np.zeros((2, 2)), np.zeros((1, 1)))
        stage = linearize(traj, linear_window(spec), spec)
        cq = build_condensing(stage, spec)
        _, B_d = exact_discrete_matrices(spec.dt)
        expected = B_d.T @ np.diag(spec.W_N) @ B_d + np.diag(spec.W_input)
        np.testing.assert_allclose(cq.H, expected, atol=1e-12)

    def test_zero_state_weights_decouple(self, params):
        spec = default_ocp_spec(
            params, N=3,
            W=np.concatenate([np.zeros(10), 0.7 * np.ones(4)]),
            W_N=np.zeros(10),
        )
        _, x0, ref, traj = hover_setup(params, N=3)
        stage = linearize(traj, ref, spec)
        cq = build_condensing(stage, spec)
        np.testing.assert_allclose(cq.H, 0.7 * np.eye(12), atol=1e-14)

    def test_matches_sparse_kkt_on_random_instances(self, params):
        res = check_condensing(n_instances=15, seed=7, tol=1e-8, params=params)
        assert res.passed, res.detail

    def test_condense_signature_builds_qp(self, params):
        spec, x0, ref, traj = hover_setup(params, N=3)
        qp = condense(linearize(traj, ref, spec), x0, spec)
        assert isinstance(qp, DenseQp)
        assert qp.n == 3 * 4


class TestRtiStep:
    def test_hover_fixed_point(self, params):
        spec, x0, ref, traj = hover_setup(params)
        sol = rti_step(x0, ref, traj, spec)
        np.testing.assert_allclose(sol.u0, nn.hover_input(params), atol=1e-10)
        assert np.max(np.abs(sol.trajectory.xs - traj.xs)) <= 1e-10
        assert np.max(np.abs(sol.trajectory.us - traj.us)) <= 1e-10
        assert sol.kkt_residual <= 1e-10
        assert sol.timings["total_s"] == pytest.approx(
            sol.timings["prepare_s"] + sol.timings["feedback_s"]
        )

    def test_linear_fixture_one_step_exact(self, rng):
        # Gauss-Newton equals Newton on the linear-quadratic fixture: one
        # iteration from any guess lands on the horizon optimum.
        spec = linear_spec()
        ref = linear_window(spec, target=(0.8, 0.0))
        x0 = np.array([-0.5, 0.4])
        for _ in range(5):
            guess = ShootingTrajectory(rng.normal(size=(6, 2)), rng.normal(size=(5, 1)))
            sol = rti_step(x0, ref, guess, spec)
            stage_at_opt = linearize(sol.trajectory, ref, spec)
            dx_ref, du_ref = sparse_kkt_solution(stage_at_opt, x0, spec)
            assert np.max(np.abs(du_ref)) <= 1e-8
            assert np.max(np.abs(dx_ref)) <= 1e-8

    def test_repeated_iterations_converge_from_cold_start(self, params):
        spec = default_ocp_spec(params)
        x0 = nn.hover_state()
        ref = nn.window(nn.HoverScenario(altitude=1.0), 0.0, spec.N, spec.dt, params)
        traj = cold_start_trajectory(x0, spec)
        _, iters, kkt = solve_to_convergence(x0, ref, traj, spec, tol=1e-4, max_iter=200)
        assert kkt <= 1e-4
        assert iters <= 200

    def test_fixed_point_stability_after_convergence(self, params):
        spec = default_ocp_spec(params)
        x0 = nn.hover_state()
        ref = nn.window(nn.HoverScenario(altitude=1.0), 0.0, spec.N, spec.dt, params)
        traj, _, _ = solve_to_convergence(x0, ref, cold_start_trajectory(x0, spec), spec,
                                          tol=1e-9, max_iter=200)
        sol = rti_step(x0, ref, traj, spec)
        assert np.max(np.abs(sol.trajectory.xs - traj.xs)) <= 1e-8
        assert np.max(np.abs(sol.trajectory.us - traj.us)) <= 1e-8

    def test_u0_respects_bounds_under_aggressive_reference(self, params, rng):
        spec = default_ocp_spec(params)
        scen = nn.HoverScenario(altitude=5.0)
        ref = nn.window(scen, 0.0, spec.N, spec.dt, params)
        for _ in range(10):
            x0 = nn.hover_state(position=rng.normal(0, 2, size=3))
            sol = rti_step(x0, ref, cold_start_trajectory(x0, spec), spec)
            assert np.all(sol.u0 >= spec.u_lb - 1e-12)
            assert np.all(sol.u0 <= spec.u_ub + 1e-12)

    def test_determinism(self, params, rng):
        spec, x0, ref, _ = hover_setup(params)
        guess = ShootingTrajectory(
            np.tile(nn.hover_state(), (11, 1)) + 0.01 * rng.normal(size=(11, 10)),
            np.tile(nn.hover_input(params), (10, 1)),
        )
        a = rti_step(x0, ref, guess, spec)
        b = rti_step(x0, ref, guess, spec)
        np.testing.assert_array_equal(a.trajectory.xs, b.trajectory.xs)
        np.testing.assert_array_equal(a.trajectory.us, b.trajectory.us)
        np.testing.assert_array_equal(a.u0, b.u0)
        assert a.kkt_residual == b.kkt_residual


class TestShift:
    def test_constant_hover_unchanged(self, params):
        spec, _, _, traj = hover_setup(params)
        shifted = shift(traj, spec)
        np.testing.assert_allclose(shifted.xs, traj.xs, atol=1e-15)
        np.testing.assert_array_equal(shifted.us, traj.us)

    def test_shift_composition_is_stateless(self, params, rng):
        spec, _, _, traj = hover_setup(params)
        traj = ShootingTrajectory(
            traj.xs + 0.01 * rng.normal(size=traj.xs.shape),
            traj.us + 0.01 * rng.normal(size=traj.us.shape),
        )
        once = shift(shift(traj, spec), spec)
        again = shift(shift(traj.copy(), spec), spec)
        np.testing.assert_array_equal(once.xs, again.xs)
        np.testing.assert_array_equal(once.us, again.us)

    def test_shift_moves_nodes(self, params, rng):
        spec, _, _, traj = hover_setup(params, N=4)
        traj.xs[:] = rng.normal(size=traj.xs.shape)
        traj.xs[:, 3:7] = nn.quat_normalize(traj.xs[:, 3:7])
        traj.us[:] = 0.1 * rng.normal(size=traj.us.shape) + nn.hover_input(params)
        shifted = shift(traj, spec)
        np.testing.assert_array_equal(shifted.xs[:-1], traj.xs[1:])
        np.testing.assert_array_equal(shifted.us[:-1], traj.us[1:])
        np.testing.assert_array_equal(shifted.us[-1], traj.us[-1])
        np.testing.assert_array_equal(
            shifted.xs[-1],
            integrate(spec.model, traj.xs[-1], traj.us[-1], spec.dt, spec.n_rk4_steps),
        )

"""Vehicle environment tests: atmosphere, aero model, thrust maps, dynamics.

Expected numbers are either direct evaluations of the documented model or
finite-difference cross-checks of the hand-derived Jacobians.
"""

import math

import numpy as np
import pytest

from rlv_landing import env
from rlv_landing.env import (
    AeroOptions,
    DegenerateStateError,
    aero_coefficients,
    aero_force_jac,
    atmosphere,
    attitude_from_thrust,
    compensated_lift_coeff,
    dynamics_3dof,
    dynamics_5dof,
    lift_force,
    lift_slope,
    load_constraint_planner,
    load_constraint_tracker,
    planner_jacobian,
    planner_rhs,
    thrust_from_attitude,
    total_aoa,
    tracker_B,
    tracker_jacobian,
    tracker_rhs,
)
from rlv_landing.params import VehicleParams

from helpers import (
    central_diff_jacobian,
    random_planner_node,
    random_tracker_state,
    rel_jac_error,
)

VP = VehicleParams()


class TestAtmosphere:
    def test_sea_level(self):
        sample = atmosphere(0.0)
        assert sample.rho == pytest.approx(1.225)
        assert sample.P_atm == pytest.approx(101325.0)

    def test_one_scale_height(self):
        sample = atmosphere(8500.0)
        assert sample.rho == pytest.approx(1.225 / math.e, rel=1e-12)
        assert sample.P_atm == pytest.approx(101325.0 / math.e, rel=1e-12)

    def test_decays_to_zero(self):
        sample = atmosphere(500e3)
        assert sample.rho < 1e-20
        assert sample.P_atm < 1e-15

    def test_negative_altitude_clamped(self):
        sample = atmosphere(-5.0)
        assert sample.rho == pytest.approx(1.225)

    def test_dynamic_pressure(self):
        sample = atmosphere(0.0, speed=100.0)
        assert sample.q_bar == pytest.approx(0.5 * 1.225 * 100.0**2)


class TestTotalAoa:
    def test_retro_thrust(self):
        v = np.array([10.0, 0.0, 30.0])
        assert total_aoa(-2e5 * v, v) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal(self):
        assert total_aoa(np.array([1e5, 0, 0]), np.array([0, 0, 50.0])) == \
            pytest.approx(math.pi / 2)

    def test_parallel(self):
        v = np.array([0.0, 3.0, 40.0])
        assert total_aoa(5e4 * v, v) == pytest.approx(math.pi)

    def test_zero_norm_raises(self):
        with pytest.raises(DegenerateStateError):
            total_aoa(np.zeros(3), np.array([1.0, 0, 0]))


class TestAeroCoefficients:
    def test_zero_incidence(self):
        c = aero_coefficients(0.0, 1e4, VP)
        assert c.C_L == 0.0
        assert c.C_D == VP.C_D0
        assert c.C_z == 0.0
        assert c.C_L_comp == 0.0

    def test_linear_slope(self):
        c = aero_coefficients(0.1, 1e4, VP)
        assert c.C_L == pytest.approx(VP.C_L_alpha * 0.1)

    def test_cz_identity(self):
        # C_z = C_L cos(a) + C_D sin(a) with C_L = 0.5, C_D = 1.2, a = 0.1
        cz = 0.5 * math.cos(0.1) + 1.2 * math.sin(0.1)
        assert cz == pytest.approx(0.6173, abs=5e-5)
        c = aero_coefficients(0.1, 1e4, VP)
        assert c.C_z == pytest.approx(
            c.C_L * math.cos(0.1) + c.C_D * math.sin(0.1), rel=1e-12)


class TestCompensatedLift:
    def test_zero_incidence_identity(self):
        assert compensated_lift_coeff(0.5, 1.2, 0.0, 10.0, 15.0) == \
            pytest.approx(0.5 - (10.0 / 15.0) * 0.5)
        # C_z(0) = C_L, so only the C_L part survives in the moment term.

    def test_cp_at_cg(self):
        assert compensated_lift_coeff(0.5, 1.2, 0.3, 0.0, 15.0) == 0.5

    def test_reference_value(self):
        got = compensated_lift_coeff(0.5, 1.2, 0.1, 7.5, 15.0)
        assert got == pytest.approx(0.5 - 0.5 * 0.6173, abs=5e-5)

    def test_zero_hinge_arm_raises(self):
        with pytest.raises(DegenerateStateError):
            compensated_lift_coeff(0.5, 1.2, 0.1, 10.0, 0.0)

    def test_reduces_lift_when_cz_positive(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a = rng.uniform(0.0, 1.2)
            C_L = VP.C_L_alpha * a
            C_D = VP.C_D0 + VP.C_D2 * a * a
            C_z = C_L * math.cos(a) + C_D * math.sin(a)
            if C_z >= 0:
                assert compensated_lift_coeff(C_L, C_D, a, VP.l_cp, VP.l_c) <= C_L


class TestLiftSlope:
    def test_small_angle_limit(self):
        E0, _ = lift_slope(0.0, VP, AeroOptions())
        expected = VP.C_L_alpha - (VP.l_cp / VP.l_c) * (VP.C_L_alpha + VP.C_D0)
        assert E0 == pytest.approx(expected, rel=1e-12)

    def test_matches_pointwise_ratio(self):
        for alpha in (1e-3, 0.05, 0.3, 1.0):
            E, _ = lift_slope(alpha**2, VP, AeroOptions())
            c = aero_coefficients(alpha, 1e4, VP)
            assert E == pytest.approx(c.C_L_comp / alpha, rel=1e-9)

    def test_derivative_matches_fd(self):
        for beta in (1e-9, 1e-4, 0.01, 0.4):
            _, dE = lift_slope(beta, VP, AeroOptions())
            eps = 1e-7 * max(beta, 1e-3)
            Ep, _ = lift_slope(beta + eps, VP, AeroOptions())
            Em, _ = lift_slope(max(beta - eps, 0.0), VP, AeroOptions())
            fd = (Ep - Em) / (eps + min(beta, eps))
            assert dE == pytest.approx(fd, rel=1e-4, abs=1e-6)

    def test_uncompensated_is_constant(self):
        E, dE = lift_slope(0.3, VP, AeroOptions(lift_compensation=False))
        assert E == VP.C_L_alpha and dE == 0.0

    def test_drag_only_zeroes_lift(self):
        E, dE = lift_slope(0.3, VP, AeroOptions(drag_only=True))
        assert E == 0.0 and dE == 0.0


class TestLiftForce:
    def test_antiparallel_gives_zero(self):
        v = np.array([5.0, -3.0, 40.0])
        assert np.allclose(lift_force(-1e4 * v, v, 1.0, VP.s_ref, 2.0), 0.0)

    def test_vacuum_gives_zero(self):
        assert np.allclose(
            lift_force(np.array([1e5, 0, -5e5]), np.array([50, 0, 300.0]),
                       0.0, VP.s_ref, 2.0), 0.0)

    def test_orthogonal_to_velocity(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            T = rng.normal(scale=3e5, size=3)
            v = rng.normal(scale=150, size=3)
            if np.linalg.norm(v) < 1.0:
                continue
            F = lift_force(T, v, 1.0, VP.s_ref, 2.0)
            assert abs(F @ v) <= 1e-9 * max(np.linalg.norm(F) * np.linalg.norm(v), 1.0)

    def test_magnitude_is_qbar_s_slope_sin_alpha(self):
        T = np.array([2e5, 0.0, -6e5])
        v = np.array([60.0, 10.0, 350.0])
        rho = 0.7
        alpha = total_aoa(T, v)
        F = lift_force(T, v, rho, VP.s_ref, VP.C_L_alpha)
        q_bar = 0.5 * rho * (v @ v)
        assert np.linalg.norm(F) == pytest.approx(
            q_bar * VP.s_ref * VP.C_L_alpha * math.sin(alpha), rel=1e-12)


class TestThrustAttitudeMap:
    def test_vertical(self):
        assert np.allclose(thrust_from_attitude(math.pi / 2, 0.0, 5.0),
                           [0, 0, -5.0], atol=1e-15)

    def test_horizontal_north(self):
        assert np.allclose(thrust_from_attitude(0.0, 0.0, 5.0), [5, 0, 0])

    def test_pure_east(self):
        assert np.allclose(thrust_from_attitude(math.pi / 2, math.pi / 2, 5.0),
                           [0, 5, 0], atol=1e-15)

    def test_norm_is_gamma(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            theta = rng.uniform(-math.pi, math.pi)
            psi = rng.uniform(-math.pi, math.pi)
            Gamma = rng.uniform(0, 1e6)
            T = thrust_from_attitude(theta, psi, Gamma)
            assert np.linalg.norm(T) == pytest.approx(Gamma, rel=1e-12, abs=1e-9)

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            theta = rng.uniform(1e-3, math.pi - 1e-3)
            psi = rng.uniform(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3)
            Gamma = rng.uniform(1.0, 1e6)
            theta2, psi2 = attitude_from_thrust(
                thrust_from_attitude(theta, psi, Gamma))
            assert theta2 == pytest.approx(theta, abs=1e-12)
            assert psi2 == pytest.approx(psi, abs=1e-12)

    def test_inverse_examples(self):
        assert attitude_from_thrust(np.array([0, 0, -1.0])) == \
            pytest.approx((math.pi / 2, 0.0))
        assert attitude_from_thrust(np.array([1.0, 0, 0])) == \
            pytest.approx((0.0, 0.0))

    def test_zero_thrust_raises(self):
        with pytest.raises(DegenerateStateError):
            attitude_from_thrust(np.zeros(3))


class TestDynamics3Dof:
    def test_mass_flow_at_sea_level(self):
        # Gamma = 816 kN delivered at sea level, Table-2 engine.
        x = np.concatenate([[0, 0, 0], [0, 0, -1.0], [VP.m0]])
        T = np.array([0.0, 0.0, -816e3])
        xdot = dynamics_3dof(x, T, VP)
        expected = -(816e3 + 101325.0 * VP.A_exit) / (VP.g_ref * VP.Isp)
        assert xdot[6] == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(-319.4, abs=0.1)

    def test_free_fall_vacuum(self):
        x = np.concatenate([[0, 0, -500e3], np.zeros(3), [VP.m0]])
        xdot = dynamics_3dof(x, np.zeros(3), VP)
        assert np.allclose(xdot[3:6], [0, 0, VP.g_ref])

    def test_hover(self):
        m = 30000.0
        x = np.concatenate([[0, 0, -400e3], np.zeros(3), [m]])
        T = np.array([0.0, 0.0, -m * VP.g_ref])
        xdot = dynamics_3dof(x, T, VP)
        assert np.allclose(xdot[3:6], 0.0, atol=1e-12)

    def test_mass_monotonic(self):
        # mdot < 0 whenever thrust or ambient pressure is nonzero.
        x = np.concatenate([[0, 0, -3000.0], [10, 0, 100.0], [VP.m0]])
        assert dynamics_3dof(x, np.zeros(3), VP)[6] < 0.0
        x_vac = np.concatenate([[0, 0, -800e3], [10, 0, 100.0], [VP.m0]])
        assert dynamics_3dof(x_vac, np.array([0, 0, -1e3]), VP)[6] < 0.0

    def test_low_speed_zeroes_aero(self):
        x = np.concatenate([[0, 0, -1000.0], [0.05, 0, 0], [VP.m0]])
        T = np.array([0.0, 0.0, -5e5])
        xdot = dynamics_3dof(x, T, VP)
        assert np.allclose(xdot[3:6], T / VP.m0 + VP.gravity)


class TestDynamics5Dof:
    def test_lag_equilibrium(self):
        x = np.concatenate([[0, 0, -3000], [30, 0, 200.0],
                            [VP.m0, 1.2, 0.1, 5e5]])
        u = np.array([1.2, 0.1, 5e5])
        xdot = dynamics_5dof(x, u, VP)
        assert np.allclose(xdot[7:10], 0.0, atol=1e-12)

    def test_lag_rate(self):
        x = np.concatenate([[0, 0, -3000], [30, 0, 200.0],
                            [VP.m0, 1.0, 0.0, 5e5]])
        u = np.array([1.2, 0.0, 5e5])
        xdot = dynamics_5dof(x, u, VP)
        assert xdot[7] == pytest.approx(0.2 / VP.tau_theta)

    def test_step_response_63_percent(self):
        # Integrate the pure throttle lag for tau_T seconds: 1 - 1/e of step.
        x = np.concatenate([[0, 0, -200e3], [0, 0, 1.0],
                            [VP.m0, math.pi / 2, 0.0, 5.0e5]])
        u = np.array([math.pi / 2, 0.0, 6.0e5])
        dt = 1e-4
        steps = int(round(VP.tau_T / dt))
        gamma = x[9]
        for _ in range(steps):
            gamma += dt * (u[2] - gamma) / VP.tau_T
        frac = (gamma - 5.0e5) / 1.0e5
        assert frac == pytest.approx(1 - math.exp(-1), abs=1e-3)

    def test_matches_3dof_translation(self):
        x = random_tracker_state(np.random.default_rng(11), VP)
        T = thrust_from_attitude(x[7], x[8], x[9])
        xdot5 = tracker_rhs(x, VP)
        x3 = np.concatenate([x[0:3], x[3:6], [x[6]]])
        xdot3 = dynamics_3dof(x3, T, VP)
        assert np.allclose(xdot5[0:6], xdot3[0:6], rtol=1e-12)


class TestJacobians:
    def test_planner_jacobian_fd(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(30):
            z = random_planner_node(rng, VP)
            f, J = planner_jacobian(z, VP)
            J_fd = central_diff_jacobian(lambda zz: planner_rhs(zz, VP), z)
            worst = max(worst, rel_jac_error(J, J_fd))
        assert worst < 1e-5

    def test_tracker_jacobian_fd(self):
        rng = np.random.default_rng(43)
        worst = 0.0
        for _ in range(30):
            x = random_tracker_state(rng, VP)
            f, A = tracker_jacobian(x, VP)
            A_fd = central_diff_jacobian(lambda xx: tracker_rhs(xx, VP), x)
            worst = max(worst, rel_jac_error(A, A_fd))
        assert worst < 1e-5

    def test_jacobians_all_aero_modes(self):
        rng = np.random.default_rng(44)
        for opts in (AeroOptions(), AeroOptions(lift_compensation=False),
                     AeroOptions(drag_only=True)):
            for _ in range(10):
                z = random_planner_node(rng, VP)
                _, J = planner_jacobian(z, VP, opts)
                J_fd = central_diff_jacobian(
                    lambda zz: planner_rhs(zz, VP, opts), z)
                assert rel_jac_error(J, J_fd) < 1e-5

    def test_velocity_rows_zero_aero(self):
        # In vacuum the velocity-row Jacobian w.r.t. T is I/m.
        z = random_planner_node(np.random.default_rng(2), VP)
        z[2] = -900e3
        _, J = planner_jacobian(z, VP)
        assert np.allclose(J[3:6, 7:10], np.eye(3) / z[6], rtol=1e-12)

    def test_tracker_B_structure(self):
        B = tracker_B(VP)
        assert np.allclose(B[0:7, :], 0.0)
        assert np.allclose(np.diag(B[7:10, :]),
                           [1 / VP.tau_theta, 1 / VP.tau_theta, 1 / VP.tau_T])

    def test_tracker_lag_diagonal(self):
        x = random_tracker_state(np.random.default_rng(8), VP)
        _, A = tracker_jacobian(x, VP)
        assert A[7, 7] == pytest.approx(-1 / VP.tau_theta)
        assert A[9, 9] == pytest.approx(-1 / VP.tau_T)


class TestLoadConstraint:
    def test_planner_gradient_fd(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            z = random_planner_node(rng, VP)
            g, grad = load_constraint_planner(z, VP, 3.0e3)
            grad_fd = central_diff_jacobian(
                lambda zz: np.array([load_constraint_planner(zz, VP, 3.0e3)[0]]), z)
            assert rel_jac_error(grad[None, :], grad_fd) < 1e-5

    def test_tracker_gradient_fd(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            x = random_tracker_state(rng, VP)
            g, grad = load_constraint_tracker(x, VP, 3.5e3)
            grad_fd = central_diff_jacobian(
                lambda xx: np.array([load_constraint_tracker(xx, VP, 3.5e3)[0]]), x)
            assert rel_jac_error(grad[None, :], grad_fd) < 1e-5

    def test_sign_matches_load(self):
        # g_L <= 0 iff q_bar * alpha <= L_lim (away from the clamp region).
        rng = np.random.default_rng(23)
        for _ in range(50):
            z = random_planner_node(rng, VP)
            z[10] = np.linalg.norm(z[7:10])   # tight relaxation
            nv = np.linalg.norm(z[3:6])
            q_bar = 0.5 * env.air_density(-z[2]) * nv * nv
            alpha = total_aoa(z[7:10], z[3:6])
            if q_bar <= 3.0e3 / math.pi:
                continue
            g, _ = load_constraint_planner(z, VP, 3.0e3)
            assert (g <= 0) == (q_bar * alpha <= 3.0e3 + 1e-9)

"""Vehicle environment: atmosphere, aerodynamic forces with optional lift
compensation, thrust attitude maps, and the continuous-time dynamics used by
the planning (3-DOF) and tracking (5-DOF) optimal control problems.

Conventions
-----------
- NED inertial frame, origin at the landing pad, down positive. Altitude is
  h = -r_z. Gravity is (0, 0, g_ref).
- The total angle of attack alpha_T is the angle between the thrust vector
  (assumed along the longitudinal axis) and -v, so alpha_T = 0 means perfect
  retro-thrust.
- Aerodynamics: C_L = C_L_alpha * alpha_T, C_D = C_D0 + C_D2 * alpha_T**2,
  drag along -v, lift perpendicular to v in the plane spanned by (T, v):

      F_lift = q_bar * s_ref * slope * ((T x v) x v) / (||T|| ||v||^2)

  whose magnitude is q_bar * s_ref * slope * sin(alpha_T). With lift
  compensation the slope is C_L'/alpha_T where C_L' = C_L - (l_cp/l_c) C_z
  accounts for the steady TVC deflection that trims the aero moment.
- Every aero quantity is a smooth function of beta = alpha_T**2, which keeps
  the analytic Jacobians finite through the retro-thrust condition alpha = 0.

All Jacobians here are hand-derived; the test suite checks each against
central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import H_SCALE, P0, RHO0, VehicleParams

# Below this airspeed dynamic pressure is negligible: drag and lift are
# forced to zero to avoid the v/||v|| singularity.
V_EPS = 0.1
# Thrust below this is treated as engine-off coast (zero-incidence, no lift).
T_EPS = 1e-9


class DegenerateStateError(ValueError):
    """A state is unusable for the requested operation (zero norms, m <= 0)."""


@dataclass(frozen=True)
class AeroOptions:
    """Which guidance-side aero model variant to evaluate."""

    lift_compensation: bool = True
    drag_only: bool = False


@dataclass(frozen=True)
class TranslationalState:
    """Position/velocity/mass triple for the planning dynamics."""

    r: np.ndarray
    v: np.ndarray
    m: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.r, self.v, [self.m]])

    @staticmethod
    def from_array(x: np.ndarray) -> "TranslationalState":
        x = np.asarray(x, float)
        return TranslationalState(x[0:3].copy(), x[3:6].copy(), float(x[6]))


@dataclass(frozen=True)
class TrackingState:
    """Translational state augmented with pitch, yaw and thrust magnitude."""

    r: np.ndarray
    v: np.ndarray
    m: float
    theta: float
    psi: float
    Gamma: float

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [self.r, self.v, [self.m, self.theta, self.psi, self.Gamma]])

    @staticmethod
    def from_array(x: np.ndarray) -> "TrackingState":
        x = np.asarray(x, float)
        return TrackingState(x[0:3].copy(), x[3:6].copy(), float(x[6]),
                             float(x[7]), float(x[8]), float(x[9]))


@dataclass(frozen=True)
class AtmosphereSample:
    rho: float       # density [kg/m^3]
    P_atm: float     # ambient pressure [Pa]
    q_bar: float | None = None   # dynamic pressure [Pa] when speed supplied


@dataclass(frozen=True)
class AeroCoefficients:
    C_L: float
    C_D: float
    C_z: float
    C_L_comp: float


def atmosphere(altitude: float, speed: float | None = None) -> AtmosphereSample:
    """Exponential atmosphere sampled at geometric altitude [m]."""
    h = max(float(altitude), 0.0)
    rho = RHO0 * math.exp(-h / H_SCALE)
    p = P0 * math.exp(-h / H_SCALE)
    q = 0.5 * rho * speed * speed if speed is not None else None
    return AtmosphereSample(rho=rho, P_atm=p, q_bar=q)


def ambient_pressure(altitude: float) -> float:
    return P0 * math.exp(-max(float(altitude), 0.0) / H_SCALE)


def air_density(altitude: float) -> float:
    return RHO0 * math.exp(-max(float(altitude), 0.0) / H_SCALE)


def total_aoa(T: np.ndarray, v: np.ndarray) -> float:
    """Total angle of attack between the thrust line and -v, in [0, pi]."""
    T = np.asarray(T, float)
    v = np.asarray(v, float)
    nT = np.linalg.norm(T)
    nv = np.linalg.norm(v)
    if nT <= T_EPS or nv <= T_EPS:
        raise DegenerateStateError("degenerate direction: zero-norm input")
    w = np.linalg.norm(np.cross(T, v))
    return math.atan2(w, -float(T @ v))


def compensated_lift_coeff(C_L: float, C_D: float, alpha_T: float,
                           l_cp: float, l_c: float) -> float:
    """Lift coefficient reduced by the steady TVC trim deflection."""
    if l_c <= 0.0:
        raise DegenerateStateError("hinge arm must be positive")
    C_z = C_L * math.cos(alpha_T) + C_D * math.sin(alpha_T)
    return C_L - (l_cp / l_c) * C_z


def aero_coefficients(alpha_T: float, q_bar: float,
                      vp: VehicleParams) -> AeroCoefficients:
    """Evaluate the synthetic coefficient model at a total angle of attack."""
    C_L = vp.C_L_alpha * alpha_T
    C_D = vp.C_D0 + vp.C_D2 * alpha_T * alpha_T
    C_z = C_L * math.cos(alpha_T) + C_D * math.sin(alpha_T)
    C_L_comp = compensated_lift_coeff(C_L, C_D, alpha_T, vp.l_cp, vp.l_c)
    return AeroCoefficients(C_L=C_L, C_D=C_D, C_z=C_z, C_L_comp=C_L_comp)


def _sinc_pair(alpha: float, beta: float) -> tuple[float, float]:
    """sinc(alpha) = sin(alpha)/alpha and its derivative w.r.t. beta = alpha^2."""
    if alpha < 1e-4:
        s = 1.0 - beta / 6.0 + beta * beta / 120.0
        ds = -1.0 / 6.0 + beta / 60.0
    else:
        s = math.sin(alpha) / alpha
        ds = (math.cos(alpha) - s) / (2.0 * beta)
    return s, ds


def lift_slope(beta: float, vp: VehicleParams,
               opts: AeroOptions) -> tuple[float, float]:
    """Effective lift slope E(beta) and dE/dbeta, beta = alpha_T^2.

    Uncompensated: E = C_L_alpha. Compensated: E = C_L'/alpha_T evaluated
    pointwise, which stays finite as alpha_T -> 0 (limit C_L_alpha -
    (l_cp/l_c)(C_L_alpha + C_D0)).
    """
    if opts.drag_only:
        return 0.0, 0.0
    if not opts.lift_compensation:
        return vp.C_L_alpha, 0.0
    alpha = math.sqrt(max(beta, 0.0))
    ratio = vp.l_cp / vp.l_c
    s, ds = _sinc_pair(alpha, beta)
    c = math.cos(alpha)
    C_D = vp.C_D0 + vp.C_D2 * beta
    E = vp.C_L_alpha - ratio * (vp.C_L_alpha * c + C_D * s)
    dE = -ratio * (-vp.C_L_alpha * s / 2.0 + vp.C_D2 * s + C_D * ds)
    return E, dE


def drag_coefficient(beta: float, vp: VehicleParams) -> tuple[float, float]:
    """C_D(beta) and dC_D/dbeta for beta = alpha_T^2."""
    return vp.C_D0 + vp.C_D2 * beta, vp.C_D2


def lift_force(T: np.ndarray, v: np.ndarray, rho: float, s_ref: float,
               slope: float) -> np.ndarray:
    """Lift force for a given effective slope; zero when thrust is off."""
    T = np.asarray(T, float)
    v = np.asarray(v, float)
    nT = np.linalg.norm(T)
    nv = np.linalg.norm(v)
    if nT <= T_EPS or nv < V_EPS or rho <= 0.0:
        return np.zeros(3)
    q_bar = 0.5 * rho * nv * nv
    direction = ((T @ v) * v - nv * nv * T) / (nT * nv * nv)
    return q_bar * s_ref * slope * direction


def _aoa_beta_grads(T: np.ndarray, v: np.ndarray):
    """alpha, beta = alpha^2, and the stable gradients of beta w.r.t. T, v."""
    nT = np.linalg.norm(T)
    nv = np.linalg.norm(v)
    Tv = float(T @ v)
    u = -Tv
    w = float(np.linalg.norm(np.cross(T, v)))
    alpha = math.atan2(w, u)
    beta = alpha * alpha
    sin_a = w / (nT * nv)
    # alpha/sin(alpha): -> 1 at alpha = 0; clamped near alpha = pi (thrust
    # along velocity never occurs during a landing burn).
    asr = alpha / max(sin_a, 1e-12) if alpha > 1e-9 else 1.0
    asr = min(asr, 1e9)
    q_T = nv * nv * T - Tv * v
    q_v = nT * nT * v - Tv * T
    denom = nT * nT * nv * nv
    scale = 2.0 * asr * u / (nT * nv)
    g_T = (scale * q_T + 2.0 * alpha * w * v) / denom
    g_v = (scale * q_v + 2.0 * alpha * w * T) / denom
    return alpha, beta, g_T, g_v


def aero_force(r_z: float, v: np.ndarray, T: np.ndarray, vp: VehicleParams,
               opts: AeroOptions) -> np.ndarray:
    """Total aerodynamic force (drag + lift) for the guidance-side model."""
    return aero_force_jac(r_z, v, T, vp, opts)[0]


def aero_force_jac(r_z: float, v: np.ndarray, T: np.ndarray,
                   vp: VehicleParams, opts: AeroOptions):
    """Aero force and its Jacobians w.r.t. r_z, v and T.

    Returns (F, dF_drz (3,), dF_dv (3,3), dF_dT (3,3)). Below V_EPS airspeed
    everything is zero; with thrust off the zero-incidence coast model is
    used (drag at C_D0, no lift) and dF_dT = 0.
    """
    v = np.asarray(v, float)
    T = np.asarray(T, float)
    nv = np.linalg.norm(v)
    zero = np.zeros(3), np.zeros(3), np.zeros((3, 3)), np.zeros((3, 3))
    if nv < V_EPS:
        return zero

    h = -r_z
    rho = air_density(h)
    drho_drz = rho / H_SCALE if h > 0.0 else 0.0
    q_bar = 0.5 * rho * nv * nv
    dqbar_drz = 0.5 * drho_drz * nv * nv
    vhat = v / nv
    s = vp.s_ref

    nT = np.linalg.norm(T)
    if nT <= T_EPS:
        # Engine-off coast: zero angle of attack assumed.
        C_D = vp.C_D0
        F = -q_bar * s * C_D * vhat
        dF_drz = -dqbar_drz * s * C_D * vhat
        dF_dv = -s * C_D * (np.outer(vhat, rho * v)
                            + q_bar * (np.eye(3) - np.outer(vhat, vhat)) / nv)
        return F, dF_drz, dF_dv, np.zeros((3, 3))

    alpha, beta, gb_T, gb_v = _aoa_beta_grads(T, v)
    C_D, dCD = drag_coefficient(beta, vp)
    E, dE = lift_slope(beta, vp, opts)

    Tv = float(T @ v)
    PV = Tv * v - nv * nv * T
    P_vec = PV / (nT * nv * nv)
    dPV_dT = np.outer(v, v) - nv * nv * np.eye(3)
    dPV_dv = Tv * np.eye(3) + np.outer(v, T) - 2.0 * np.outer(T, v)
    dP_dT = dPV_dT / (nT * nv * nv) - np.outer(PV, T) / (nT ** 3 * nv * nv)
    dP_dv = dPV_dv / (nT * nv * nv) - 2.0 * np.outer(PV, v) / (nT * nv ** 4)

    F_drag = -q_bar * s * C_D * vhat
    F_lift = q_bar * s * E * P_vec
    F = F_drag + F_lift

    dF_drz = dqbar_drz * s * (-C_D * vhat + E * P_vec)

    dF_dT = (-q_bar * s * dCD * np.outer(vhat, gb_T)
             + q_bar * s * (np.outer(P_vec, dE * gb_T) + E * dP_dT))

    dqbar_dv = rho * v
    dvhat_dv = (np.eye(3) - np.outer(vhat, vhat)) / nv
    dF_dv = (-s * (C_D * np.outer(vhat, dqbar_dv)
                   + q_bar * dCD * np.outer(vhat, gb_v)
                   + q_bar * C_D * dvhat_dv)
             + s * (np.outer(P_vec, E * dqbar_dv + q_bar * dE * gb_v)
                    + q_bar * E * dP_dv))
    return F, dF_drz, dF_dv, dF_dT


def dynamics_3dof(x: np.ndarray, T: np.ndarray, vp: VehicleParams,
                  opts: AeroOptions = AeroOptions()) -> np.ndarray:
    """Physical translational dynamics: x = (r, v, m), control = thrust vector.

    Mass flow uses the delivered thrust magnitude plus the back-pressure
    loss term evaluated at the current altitude.
    """
    x = np.asarray(x, float)
    T = np.asarray(T, float)
    r, v, m = x[0:3], x[3:6], x[6]
    if m <= 0.0:
        raise DegenerateStateError("mass must be positive")
    F_aero = aero_force(r[2], v, T, vp, opts)
    P_e = ambient_pressure(-r[2])
    xdot = np.empty(7)
    xdot[0:3] = v
    xdot[3:6] = (T + F_aero) / m + vp.gravity
    xdot[6] = -(np.linalg.norm(T) + P_e * vp.A_exit) / (vp.g_ref * vp.Isp)
    return xdot


def thrust_from_attitude(theta: float, psi: float, Gamma: float) -> np.ndarray:
    """Thrust vector from pitch/yaw (Y-Z sequence) and magnitude."""
    cp, sp = math.cos(psi), math.sin(psi)
    ct, st = math.cos(theta), math.sin(theta)
    return Gamma * np.array([cp * ct, sp, -cp * st])


def thrust_direction_jac(theta: float, psi: float):
    """Unit thrust direction d(theta, psi) and its angle derivatives."""
    cp, sp = math.cos(psi), math.sin(psi)
    ct, st = math.cos(theta), math.sin(theta)
    d = np.array([cp * ct, sp, -cp * st])
    dd_dtheta = np.array([-cp * st, 0.0, -cp * ct])
    dd_dpsi = np.array([-sp * ct, cp, sp * st])
    return d, dd_dtheta, dd_dpsi


def attitude_from_thrust(T: np.ndarray) -> tuple[float, float]:
    """Pitch/yaw recovering thrust_from_attitude, psi in (-pi/2, pi/2)."""
    T = np.asarray(T, float)
    nT = np.linalg.norm(T)
    if nT <= T_EPS:
        raise DegenerateStateError("zero thrust has no attitude")
    psi = math.asin(np.clip(T[1] / nT, -1.0, 1.0))
    theta = math.atan2(-T[2], T[0])
    return theta, psi


def dynamics_5dof(x: np.ndarray, u: np.ndarray, vp: VehicleParams,
                  opts: AeroOptions = AeroOptions()) -> np.ndarray:
    """Tracking dynamics: x = (r, v, m, theta, psi, Gamma), u = commands."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    f = tracker_rhs(x, vp, opts)
    f[7:10] += tracker_B(vp)[7:10] @ u
    return f


def tracker_B(vp: VehicleParams) -> np.ndarray:
    """Constant control-effectiveness matrix of the tracking dynamics."""
    B = np.zeros((10, 3))
    B[7, 0] = 1.0 / vp.tau_theta
    B[8, 1] = 1.0 / vp.tau_theta
    B[9, 2] = 1.0 / vp.tau_T
    return B


def tracker_rhs(x: np.ndarray, vp: VehicleParams,
                opts: AeroOptions = AeroOptions()) -> np.ndarray:
    """Autonomous part f(x) of the tracking dynamics (commands enter via B)."""
    x = np.asarray(x, float)
    r, v, m = x[0:3], x[3:6], x[6]
    theta, psi, Gamma = x[7], x[8], x[9]
    if m <= 0.0:
        raise DegenerateStateError("mass must be positive")
    T = thrust_from_attitude(theta, psi, Gamma)
    F_aero = aero_force(r[2], v, T, vp, opts)
    P_e = ambient_pressure(-r[2])
    f = np.empty(10)
    f[0:3] = v
    f[3:6] = (T + F_aero) / m + vp.gravity
    f[6] = -(Gamma + P_e * vp.A_exit) / (vp.g_ref * vp.Isp)
    f[7] = -theta / vp.tau_theta
    f[8] = -psi / vp.tau_theta
    f[9] = -Gamma / vp.tau_T
    return f


def tracker_jacobian(x: np.ndarray, vp: VehicleParams,
                     opts: AeroOptions = AeroOptions()):
    """f(x) and A = df/dx (10x10) of the autonomous tracking dynamics."""
    x = np.asarray(x, float)
    r, v, m = x[0:3], x[3:6], x[6]
    theta, psi, Gamma = x[7], x[8], x[9]
    if m <= 0.0 or not np.all(np.isfinite(x)):
        raise DegenerateStateError("degenerate tracking state")
    d, dd_dtheta, dd_dpsi = thrust_direction_jac(theta, psi)
    T = Gamma * d
    F, dF_drz, dF_dv, dF_dT = aero_force_jac(r[2], v, T, vp, opts)
    P_e = ambient_pressure(-r[2])
    dPe_drz = P_e / H_SCALE if -r[2] > 0.0 else 0.0
    mdot_coeff = 1.0 / (vp.g_ref * vp.Isp)

    f = np.empty(10)
    f[0:3] = v
    f[3:6] = (T + F) / m + vp.gravity
    f[6] = -(Gamma + P_e * vp.A_exit) * mdot_coeff
    f[7] = -theta / vp.tau_theta
    f[8] = -psi / vp.tau_theta
    f[9] = -Gamma / vp.tau_T

    A = np.zeros((10, 10))
    A[0:3, 3:6] = np.eye(3)
    eye_plus = np.eye(3) + dF_dT
    A[3:6, 2] = dF_drz / m
    A[3:6, 3:6] = dF_dv / m
    A[3:6, 6] = -(T + F) / (m * m)
    A[3:6, 7] = eye_plus @ (Gamma * dd_dtheta) / m
    A[3:6, 8] = eye_plus @ (Gamma * dd_dpsi) / m
    A[3:6, 9] = eye_plus @ d / m
    A[6, 2] = -dPe_drz * vp.A_exit * mdot_coeff
    A[6, 9] = -mdot_coeff
    A[7, 7] = -1.0 / vp.tau_theta
    A[8, 8] = -1.0 / vp.tau_theta
    A[9, 9] = -1.0 / vp.tau_T
    return f, A


def planner_rhs(z: np.ndarray, vp: VehicleParams,
                opts: AeroOptions = AeroOptions()) -> np.ndarray:
    """Planning OCP dynamics over z = (r, v, m, T, Gamma).

    The relaxed magnitude Gamma drives the mass flow; at the converged
    optimum ||T|| = Gamma makes this identical to dynamics_3dof.
    """
    z = np.asarray(z, float)
    r, v, m, T, Gamma = z[0:3], z[3:6], z[6], z[7:10], z[10]
    if m <= 0.0:
        raise DegenerateStateError("mass must be positive")
    F_aero = aero_force(r[2], v, T, vp, opts)
    P_e = ambient_pressure(-r[2])
    f = np.empty(7)
    f[0:3] = v
    f[3:6] = (T + F_aero) / m + vp.gravity
    f[6] = -(Gamma + P_e * vp.A_exit) / (vp.g_ref * vp.Isp)
    return f


def planner_jacobian(z: np.ndarray, vp: VehicleParams,
                     opts: AeroOptions = AeroOptions()):
    """f(z) and J = df/dz (7x11) for the planning OCP dynamics."""
    z = np.asarray(z, float)
    r, v, m, T, Gamma = z[0:3], z[3:6], z[6], z[7:10], z[10]
    if m <= 0.0 or not np.all(np.isfinite(z)):
        raise DegenerateStateError("degenerate planning node")
    F, dF_drz, dF_dv, dF_dT = aero_force_jac(r[2], v, T, vp, opts)
    P_e = ambient_pressure(-r[2])
    dPe_drz = P_e / H_SCALE if -r[2] > 0.0 else 0.0
    mdot_coeff = 1.0 / (vp.g_ref * vp.Isp)

    f = np.empty(7)
    f[0:3] = v
    f[3:6] = (T + F) / m + vp.gravity
    f[6] = -(Gamma + P_e * vp.A_exit) * mdot_coeff

    J = np.zeros((7, 11))
    J[0:3, 3:6] = np.eye(3)
    J[3:6, 2] = dF_drz / m
    J[3:6, 3:6] = dF_dv / m
    J[3:6, 6] = -(T + F) / (m * m)
    J[3:6, 7:10] = (np.eye(3) + dF_dT) / m
    J[6, 2] = -dPe_drz * vp.A_exit * mdot_coeff
    J[6, 10] = -mdot_coeff
    return f, J


def _load_angle(q_bar: float, L_lim: float) -> tuple[float, float]:
    """Clamped load-bound angle a = min(L_lim/q_bar, pi) and da/dq_bar."""
    if q_bar <= L_lim / math.pi:
        return math.pi, 0.0
    return L_lim / q_bar, -L_lim / (q_bar * q_bar)


def load_constraint_planner(z: np.ndarray, vp: VehicleParams, L_lim: float):
    """Aerodynamic load constraint g_L <= 0 and its gradient over z (11,).

    g_L = T.v + Gamma ||v|| cos(min(L_lim/q_bar, pi)), the planner form with
    ||T|| replaced by the relaxed magnitude.
    """
    z = np.asarray(z, float)
    r, v, T, Gamma = z[0:3], z[3:6], z[7:10], z[10]
    nv = np.linalg.norm(v)
    grad = np.zeros(11)
    if nv < V_EPS:
        # Near-zero airspeed: keep the bilinear term only, with the
        # direction convention v/||v|| -> 0.
        g = float(T @ v)
        grad[3:6] = T
        grad[7:10] = v
        return g, grad
    h = -r[2]
    rho = air_density(h)
    drho_drz = rho / H_SCALE if h > 0.0 else 0.0
    q_bar = 0.5 * rho * nv * nv
    a, da_dq = _load_angle(q_bar, L_lim)
    c_a, s_a = math.cos(a), math.sin(a)
    dca_dq = -s_a * da_dq

    g = float(T @ v) + Gamma * nv * c_a
    vhat = v / nv
    grad[2] = Gamma * nv * dca_dq * (0.5 * drho_drz * nv * nv)
    grad[3:6] = T + Gamma * (c_a * vhat + nv * dca_dq * rho * v)
    grad[7:10] = v
    grad[10] = nv * c_a
    return g, grad


def load_constraint_tracker(x: np.ndarray, vp: VehicleParams, L_lim: float):
    """Aerodynamic load constraint and gradient over the tracking state (10,)."""
    x = np.asarray(x, float)
    r, v = x[0:3], x[3:6]
    theta, psi, Gamma = x[7], x[8], x[9]
    d, dd_dtheta, dd_dpsi = thrust_direction_jac(theta, psi)
    nv = np.linalg.norm(v)
    grad = np.zeros(10)
    if nv < V_EPS:
        g = Gamma * float(d @ v)
        grad[3:6] = Gamma * d
        grad[7] = Gamma * float(dd_dtheta @ v)
        grad[8] = Gamma * float(dd_dpsi @ v)
        grad[9] = float(d @ v)
        return g, grad
    h = -r[2]
    rho = air_density(h)
    drho_drz = rho / H_SCALE if h > 0.0 else 0.0
    q_bar = 0.5 * rho * nv * nv
    a, da_dq = _load_angle(q_bar, L_lim)
    c_a, s_a = math.cos(a), math.sin(a)
    dca_dq = -s_a * da_dq

    g = Gamma * float(d @ v) + Gamma * nv * c_a
    vhat = v / nv
    grad[2] = Gamma * nv * dca_dq * (0.5 * drho_drz * nv * nv)
    grad[3:6] = Gamma * d + Gamma * (c_a * vhat + nv * dca_dq * rho * v)
    grad[7] = Gamma * float(dd_dtheta @ v)
    grad[8] = Gamma * float(dd_dpsi @ v)
    grad[9] = float(d @ v) + nv * c_a
    return g, grad

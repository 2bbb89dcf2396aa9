"""Fuel-optimal planning subproblem: coast-phase embedding, time dilation,
linearization, and assembly of the convex (SOCP) subproblem.

The free-final-time problem is transcribed on the unit grid s_k = k/N with
physical time t = eta * s, so the burn duration eta is a decision variable.
Dynamics are linearized about a reference as

    X' ~= Abar Z + Cbar eta + Dbar,
    Abar = eta_ref * df/dZ,  Cbar = f(Z_ref),  Dbar = -eta_ref * (df/dZ) Z_ref

and discretized with the trapezoidal rule. The non-convex thrust lower
bound is relaxed via the magnitude variable Gamma with the cone
||T_k|| <= Gamma_k, which is empirically tight at convergence. In
ignition-fit mode the initial condition couples to the ignition time t_c
through a quadratic least-squares fit of the coast trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import scipy.sparse as sp

from . import env
from .conic import (
    NONNEG,
    SOC,
    ConeBlock,
    ConicProgram,
    make_scaling,
    scale_program,
)
from .conic.scaling import equilibrate_rows
from .env import AeroOptions, DegenerateStateError
from .params import PlanningConfig, VehicleParams
from .scp import add_trust_region

NZ = 11          # per-node variables (r, v, m, T, Gamma)
NX = 7           # state dimension
IDX_GAMMA = 10   # Gamma offset inside a node block


@dataclass(frozen=True)
class CoastTrajectory:
    """Time-stamped ballistic samples from the current state."""

    times: np.ndarray      # (n,)
    r: np.ndarray          # (n, 3)
    v: np.ndarray          # (n, 3)
    truncated: bool        # reached the ground before the horizon


@dataclass(frozen=True)
class CoastFit:
    """Quadratic polynomial fit of the coast trajectory vs ignition time."""

    K_r: np.ndarray        # (3, 3): r(t_c) = K_r @ [t_c^2, t_c, 1]
    K_v: np.ndarray        # (3, 3)
    window: tuple[float, float]
    max_residual_r: float
    max_residual_v: float

    def position(self, t_c: float) -> np.ndarray:
        return self.K_r @ np.array([t_c * t_c, t_c, 1.0])

    def velocity(self, t_c: float) -> np.ndarray:
        return self.K_v @ np.array([t_c * t_c, t_c, 1.0])


@dataclass(frozen=True)
class PlanningBoundary:
    """Initial-condition mode of the planning problem."""

    mode: Literal["ignition-fit", "current-state"]
    m0: float
    coast_fit: CoastFit | None = None       # ignition-fit mode
    r_now: np.ndarray | None = None         # current-state mode
    v_now: np.ndarray | None = None


@dataclass(frozen=True)
class PlanningReference:
    """SCP reference point: node variables plus dilation and ignition time."""

    N: int
    eta: float
    t_c: float | None
    Z: np.ndarray          # (N+1, NZ)

    @property
    def r(self) -> np.ndarray:
        return self.Z[:, 0:3]

    @property
    def v(self) -> np.ndarray:
        return self.Z[:, 3:6]

    @property
    def m(self) -> np.ndarray:
        return self.Z[:, 6]

    @property
    def T(self) -> np.ndarray:
        return self.Z[:, 7:10]

    @property
    def Gamma(self) -> np.ndarray:
        return self.Z[:, 10]


def propagate_coast(r0: np.ndarray, v0: np.ndarray, m0: float,
                    vp: VehicleParams, horizon: float,
                    step: float = 0.25) -> CoastTrajectory:
    """RK4 ballistic propagation with zero thrust and zero angle of attack."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    opts = AeroOptions(drag_only=True)   # zero-alpha coast: drag only
    x = np.concatenate([np.asarray(r0, float), np.asarray(v0, float), [m0]])
    zero_T = np.zeros(3)

    def f(state):
        return env.dynamics_3dof(state, zero_T, vp, opts)

    n_steps = int(round(horizon / step))
    times = [0.0]
    states = [x.copy()]
    truncated = False
    for i in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * step * k1)
        k3 = f(x + 0.5 * step * k2)
        k4 = f(x + step * k3)
        x = x + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        times.append((i + 1) * step)
        states.append(x.copy())
        if x[2] >= 0.0:
            truncated = True
            break
    arr = np.array(states)
    return CoastTrajectory(times=np.array(times), r=arr[:, 0:3], v=arr[:, 3:6],
                           truncated=truncated)


def fit_coast_polynomial(coast: CoastTrajectory,
                         window: tuple[float, float]) -> CoastFit:
    """Row-wise least squares of r(t), v(t) against the basis [t^2, t, 1]."""
    lo, hi = window
    mask = (coast.times >= lo - 1e-9) & (coast.times <= hi + 1e-9)
    t = coast.times[mask]
    if t.size < 3:
        raise ValueError("need at least 3 coast samples inside the fit window")
    basis = np.column_stack([t * t, t, np.ones_like(t)])
    if np.linalg.matrix_rank(basis) < 3:
        raise ValueError("coast fit window too narrow: rank-deficient basis")
    K_r, _, _, _ = np.linalg.lstsq(basis, coast.r[mask], rcond=None)
    K_v, _, _, _ = np.linalg.lstsq(basis, coast.v[mask], rcond=None)
    res_r = np.abs(basis @ K_r - coast.r[mask]).max()
    res_v = np.abs(basis @ K_v - coast.v[mask]).max()
    return CoastFit(K_r=K_r.T, K_v=K_v.T, window=(float(t[0]), float(t[-1])),
                    max_residual_r=float(res_r), max_residual_v=float(res_v))


def tilt_limit_profile(t: float, t_f: float, t_theta: float,
                       theta_lim_max: float) -> float:
    """Time-varying tilt bound: constant, then a parabolic taper to vertical."""
    if t_theta <= 0.0:
        return theta_lim_max
    if t <= t_f - t_theta:
        return theta_lim_max
    K_theta = 2.0 * theta_lim_max / (t_theta * t_theta)
    dt = max(t_f - t, 0.0)
    return 0.5 * K_theta * dt * dt


def initial_guess_planning(boundary: PlanningBoundary, cfg: PlanningConfig,
                           vp: VehicleParams,
                           t_c_guess: float | None = None,
                           eta_guess: float | None = None) -> PlanningReference:
    """Straight-line reference with vertical mid-throttle thrust."""
    if boundary.mode == "ignition-fit":
        t_c = 0.5 * sum(boundary.coast_fit.window) if t_c_guess is None else t_c_guess
        r0 = boundary.coast_fit.position(t_c)
        v0 = boundary.coast_fit.velocity(t_c)
    else:
        t_c = None
        r0 = np.asarray(boundary.r_now, float)
        v0 = np.asarray(boundary.v_now, float)
    m0 = boundary.m0

    if eta_guess is None:
        accel = 0.5 * (vp.T_min + vp.T_max) / m0 - vp.g_ref
        eta = float(np.clip(np.linalg.norm(v0) / accel, 5.0, 60.0))
    else:
        eta = eta_guess

    N = cfg.N
    tau = np.arange(N + 1) / N
    Z = np.zeros((N + 1, NZ))
    Z[:, 0:3] = r0 * (1.0 - tau)[:, None]
    Z[:, 3:6] = v0 * (1.0 - tau)[:, None]
    mid = 0.5 * (vp.T_min + vp.T_max)
    gamma = np.array([mid - vp.A_exit * env.ambient_pressure(-rz)
                      for rz in Z[:, 2]])
    Z[:, 9] = -gamma          # T_z straight up
    Z[:, 10] = gamma
    # Mass from integrating the Gamma profile (gross flow = Gamma + Pe*Ae).
    m = np.empty(N + 1)
    m[0] = m0
    dt = eta / N
    for k in range(N):
        flow_k = (Z[k, 10] + env.ambient_pressure(-Z[k, 2]) * vp.A_exit)
        flow_k1 = (Z[k + 1, 10] + env.ambient_pressure(-Z[k + 1, 2]) * vp.A_exit)
        m[k + 1] = m[k] - 0.5 * dt * (flow_k + flow_k1) / (vp.g_ref * vp.Isp)
    Z[:, 6] = m
    return PlanningReference(N=N, eta=eta, t_c=t_c, Z=Z)


@dataclass(frozen=True)
class LinearizedNode:
    """Trapezoidal-row ingredients at one reference node."""

    A: np.ndarray      # eta_ref * df/dZ  (7 x 11)
    C: np.ndarray      # f(Z_ref)         (7,)
    D: np.ndarray      # -eta_ref * (df/dZ) Z_ref (7,)
    g_load: float      # load constraint value at the reference
    grad_load: np.ndarray   # (11,)


def linearize_planning(z_node: np.ndarray, eta_ref: float,
                       vp: VehicleParams, cfg: PlanningConfig,
                       opts: AeroOptions, node_index: int = -1) -> LinearizedNode:
    """Linearize dynamics and load constraint at one reference node."""
    z_node = np.asarray(z_node, float)
    if not np.all(np.isfinite(z_node)) or z_node[6] <= 0.0 or z_node[IDX_GAMMA] <= 0.0:
        raise DegenerateStateError(
            f"degenerate planning reference at node {node_index}")
    f, J = env.planner_jacobian(z_node, vp, opts)
    A = eta_ref * J
    D = -A @ z_node
    g, grad = env.load_constraint_planner(z_node, vp, cfg.L_lim)
    return LinearizedNode(A=A, C=f, D=D, g_load=g, grad_load=grad)


class PlanningProblem:
    """Subproblem factory for one SCP run of the planning OCP.

    The variable scaling is computed once from the initial reference and
    reused for every iteration so that trust-region costs and convergence
    thresholds stay comparable across iterations.
    """

    def __init__(self, boundary: PlanningBoundary, vp: VehicleParams,
                 cfg: PlanningConfig, opts: AeroOptions | None = None):
        self.boundary = boundary
        self.vp = vp
        self.cfg = cfg
        self.opts = opts if opts is not None else AeroOptions(
            lift_compensation=cfg.lift_compensation, drag_only=cfg.drag_only)
        self.N = cfg.N
        self.with_tc = boundary.mode == "ignition-fit"
        self.n_vars = NZ * (self.N + 1) + 1 + (1 if self.with_tc else 0)
        self.idx_eta = NZ * (self.N + 1)
        self.idx_tc = self.idx_eta + 1 if self.with_tc else None
        self._scaling_bounds: tuple[np.ndarray, np.ndarray] | None = None
        self.last_program: ConicProgram | None = None

    # -- variable layout helpers -------------------------------------------------

    def node_slice(self, k: int) -> slice:
        return slice(NZ * k, NZ * (k + 1))

    def stack(self, ref: PlanningReference) -> np.ndarray:
        x = np.zeros(self.n_vars)
        x[:NZ * (self.N + 1)] = ref.Z.reshape(-1)
        x[self.idx_eta] = ref.eta
        if self.with_tc:
            x[self.idx_tc] = ref.t_c
        return x

    def unstack(self, x: np.ndarray) -> PlanningReference:
        Z = x[:NZ * (self.N + 1)].reshape(self.N + 1, NZ).copy()
        eta = float(x[self.idx_eta])
        t_c = float(x[self.idx_tc]) if self.with_tc else None
        return PlanningReference(N=self.N, eta=eta, t_c=t_c, Z=Z)

    # -- scaling -------------------------------------------------------------------

    def scaling_bounds(self, ref: PlanningReference):
        if self._scaling_bounds is not None:
            return self._scaling_bounds
        N, vp = self.N, self.vp
        lo = np.empty(self.n_vars)
        hi = np.empty(self.n_vars)
        r, v = ref.r, ref.v
        for axis in range(3):
            span = max(r[:, axis].max() - r[:, axis].min(), 1.0)
            pad = 0.5 * span + 200.0
            lo_r, hi_r = r[:, axis].min() - pad, r[:, axis].max() + pad
            span_v = max(v[:, axis].max() - v[:, axis].min(), 1.0)
            pad_v = 0.5 * span_v + 30.0
            lo_v, hi_v = v[:, axis].min() - pad_v, v[:, axis].max() + pad_v
            for k in range(N + 1):
                base = NZ * k
                lo[base + axis], hi[base + axis] = lo_r, hi_r
                lo[base + 3 + axis], hi[base + 3 + axis] = lo_v, hi_v
        for k in range(N + 1):
            base = NZ * k
            lo[base + 6], hi[base + 6] = vp.m_dry_floor, vp.m0 * 1.001
            for axis in range(3):
                lo[base + 7 + axis], hi[base + 7 + axis] = -vp.T_max, vp.T_max
            lo[base + IDX_GAMMA], hi[base + IDX_GAMMA] = 0.0, vp.T_max
        lo[self.idx_eta], hi[self.idx_eta] = 0.5 * ref.eta, 2.0 * ref.eta
        if self.with_tc:
            lo[self.idx_tc], hi[self.idx_tc] = self.cfg.tc_window
            if hi[self.idx_tc] - lo[self.idx_tc] < 1e-9:
                lo[self.idx_tc] -= 0.5
                hi[self.idx_tc] += 0.5
        self._scaling_bounds = (lo, hi)
        return self._scaling_bounds

    # -- SCP adapter interface ------------------------------------------------------

    def build(self, ref: PlanningReference) -> ConicProgram:
        N, vp, cfg = self.N, self.vp, self.cfg
        eta_ref = ref.eta
        nodes = [linearize_planning(ref.Z[k], eta_ref, vp, cfg, self.opts, k)
                 for k in range(N + 1)]

        rows_A, cols_A, vals_A, b_rows = [], [], [], []
        row = 0

        def add_entry(r_, c_, v_):
            rows_A.append(r_)
            cols_A.append(c_)
            vals_A.append(v_)

        def add_block(r0, cols, block):
            block = np.atleast_2d(block)
            for i in range(block.shape[0]):
                for j, cj in enumerate(cols):
                    if block[i, j] != 0.0:
                        add_entry(r0 + i, cj, block[i, j])

        # Trapezoidal dynamics rows: X_{k+1} - X_k - (1/2N)(...) = rhs.
        half = 1.0 / (2.0 * N)
        for k in range(N):
            nk, nk1 = nodes[k], nodes[k + 1]
            sl_k = self.node_slice(k)
            sl_k1 = self.node_slice(k + 1)
            cols_k = list(range(sl_k.start, sl_k.stop))
            cols_k1 = list(range(sl_k1.start, sl_k1.stop))
            add_block(row, cols_k1[:NX], np.eye(NX))
            add_block(row, cols_k[:NX], -np.eye(NX))
            add_block(row, cols_k, -half * nk.A)
            add_block(row, cols_k1, -half * nk1.A)
            Ccol = -half * (nk.C + nk1.C)
            for i in range(NX):
                if Ccol[i] != 0.0:
                    add_entry(row + i, self.idx_eta, Ccol[i])
            rhs = half * (nk.D + nk1.D)
            b_rows.extend(rhs)
            row += NX

        # Boundary rows.
        sl0 = self.node_slice(0)
        if self.with_tc:
            fit = self.boundary.coast_fit
            tc_ref = ref.t_c
            lin_vec = np.array([2.0 * tc_ref, 1.0, 0.0])
            const_vec = np.array([-tc_ref * tc_ref, 0.0, 1.0])
            for (K, offset) in ((fit.K_r, 0), (fit.K_v, 3)):
                slope = K @ lin_vec
                const = K @ const_vec
                for i in range(3):
                    add_entry(row, sl0.start + offset + i, 1.0)
                    add_entry(row, self.idx_tc, -slope[i])
                    b_rows.append(const[i])
                    row += 1
        else:
            for i, val in enumerate(np.concatenate(
                    [self.boundary.r_now, self.boundary.v_now])):
                add_entry(row, sl0.start + i, 1.0)
                b_rows.append(float(val))
                row += 1
        add_entry(row, sl0.start + 6, 1.0)
        b_rows.append(self.boundary.m0)
        row += 1
        # Terminal pad condition r = v = 0.
        slN = self.node_slice(N)
        for i in range(6):
            add_entry(row, slN.start + i, 1.0)
            b_rows.append(0.0)
            row += 1

        # Nodes whose tilt bound is numerically zero (the taper end) would pin
        # their SOC cone to a boundary ray; encode vertical thrust exactly as
        # equalities instead and drop the pinned cone.
        vertical = []
        for k in range(N + 1):
            t_k = eta_ref * k / N
            if tilt_limit_profile(t_k, eta_ref, cfg.t_theta,
                                  cfg.theta_lim_max) < 1e-5:
                vertical.append(k)
                base = NZ * k
                for col, gamma_coef in ((base + 7, 0.0), (base + 8, 0.0),
                                        (base + 9, 1.0)):
                    add_entry(row, col, 1.0)
                    if gamma_coef:
                        add_entry(row, base + IDX_GAMMA, gamma_coef)
                    b_rows.append(0.0)
                    row += 1
        vertical_set = set(vertical)

        n_eq = row
        A_mat = sp.csr_matrix((vals_A, (rows_A, cols_A)),
                              shape=(n_eq, self.n_vars))
        b_vec = np.asarray(b_rows, float)

        # Inequality rows (nonnegative orthant), then SOC blocks.
        rows_G, cols_G, vals_G, h_rows = [], [], [], []
        g_row = 0

        def add_ineq(cols, coefs, bound):
            nonlocal g_row
            for cj, vj in zip(cols, coefs):
                if vj != 0.0:
                    rows_G.append(g_row)
                    cols_G.append(cj)
                    vals_G.append(vj)
            h_rows.append(bound)
            g_row += 1

        skip_first_load = self.boundary.mode == "current-state"
        for k in range(N + 1):
            base = NZ * k
            h_alt = -ref.Z[k, 2]
            P_e = env.ambient_pressure(h_alt)
            g_lo = vp.T_min * (1.0 + cfg.mu_T) - P_e * vp.A_exit
            g_hi = vp.T_max * (1.0 - cfg.mu_T) - P_e * vp.A_exit
            add_ineq([base + IDX_GAMMA], [-1.0], -g_lo)
            add_ineq([base + IDX_GAMMA], [1.0], g_hi)
            # Tilt rows: T_z + cos(theta_lim(t_k)) * Gamma <= 0; vertical
            # nodes carry thrust-direction equalities instead.
            if k not in vertical_set:
                t_k = eta_ref * k / N
                theta_lim = tilt_limit_profile(t_k, eta_ref, cfg.t_theta,
                                               cfg.theta_lim_max)
                add_ineq([base + 9, base + IDX_GAMMA],
                         [1.0, math.cos(theta_lim)], 0.0)
            # Linearized aerodynamic load rows. In the clamped regime
            # (q_bar <= L_lim/pi) the true constraint T.v <= Gamma ||v|| is
            # already implied by the cone, so the row is dropped there.
            if not (k == 0 and skip_first_load):
                nd = nodes[k]
                speed = np.linalg.norm(ref.Z[k, 3:6])
                q_bar = 0.5 * env.air_density(-ref.Z[k, 2]) * speed * speed
                if q_bar > cfg.L_lim / math.pi and speed >= env.V_EPS:
                    cols = list(range(base, base + NZ))
                    bound = float(nd.grad_load @ ref.Z[k] - nd.g_load)
                    add_ineq(cols, nd.grad_load, bound)
        # Thrust-magnitude rate rows on the reference time step.
        dG = vp.Tdot_lim * eta_ref / N
        for k in range(N):
            gk = NZ * k + IDX_GAMMA
            gk1 = NZ * (k + 1) + IDX_GAMMA
            add_ineq([gk1, gk], [1.0, -1.0], dG)
            add_ineq([gk, gk1], [1.0, -1.0], dG)
        # Dilation hard bounds, and the ignition window.
        add_ineq([self.idx_eta], [-1.0], -cfg.eta_bounds[0])
        add_ineq([self.idx_eta], [1.0], cfg.eta_bounds[1])
        if self.with_tc:
            lo_tc, hi_tc = self.boundary.coast_fit.window
            add_ineq([self.idx_tc], [-1.0], -lo_tc)
            add_ineq([self.idx_tc], [1.0], hi_tc)

        n_nonneg = g_row
        # SOC blocks ||T_k|| <= Gamma_k appended below the orthant rows;
        # vertical nodes satisfy the bound by construction.
        n_soc = 0
        for k in range(N + 1):
            if k in vertical_set:
                continue
            base = NZ * k
            for j, col in enumerate((base + IDX_GAMMA, base + 7, base + 8,
                                     base + 9)):
                rows_G.append(g_row + j)
                cols_G.append(col)
                vals_G.append(-1.0)
            h_rows.extend([0.0, 0.0, 0.0, 0.0])
            g_row += 4
            n_soc += 1

        G_mat = sp.csr_matrix((vals_G, (rows_G, cols_G)),
                              shape=(g_row, self.n_vars))
        h_vec = np.asarray(h_rows, float)
        cones = [ConeBlock(NONNEG, n_nonneg)] + \
                [ConeBlock(SOC, 4) for _ in range(n_soc)]

        program = ConicProgram(c=np.zeros(self.n_vars), A=A_mat, b=b_vec,
                               G=G_mat, h=h_vec, cones=cones)
        lo, hi = self.scaling_bounds(ref)
        scaled = equilibrate_rows(scale_program(program, lo, hi))
        # Objective: -m_N in scaled units, plus the soft trust region.
        c = np.zeros(self.n_vars)
        c[self.node_slice(self.N).start + 6] = -1.0
        scaled.c = scaled.c + c     # scaled cost of the affine program is zero
        add_trust_region(scaled, scaled.scaling.scale(self.stack(ref)),
                         self.cfg.W_tr)
        self.last_program = scaled
        return scaled

    def reference_vector(self, ref: PlanningReference) -> np.ndarray:
        lo, hi = self.scaling_bounds(ref)
        return make_scaling(lo, hi).scale(self.stack(ref))

    def decode(self, ref: PlanningReference,
               x_scaled: np.ndarray) -> PlanningReference:
        lo, hi = self.scaling_bounds(ref)
        return self.unstack(make_scaling(lo, hi).unscale(x_scaled))

"""Primal-dual interior-point solver for quadratic conic programs.

Mehrotra predictor-corrector path following with Nesterov-Todd scaling on
second-order cone blocks. The quadratic objective is kept natively in the
KKT system (no epigraph lift), so the same code path covers LPs, QPs and
SOCPs with quadratic cost:

    minimize    0.5 x' P x + c' x
    subject to  A x = b,  G x + s = h,  s in K.

Each iteration factorizes the quasi-definite KKT matrix

    [ P + eps I    A'          G'        ]
    [ A           -eps I       0         ]
    [ G            0          -(W'W + eps I) ]

with a sparse LU (fixed pivot order, deterministic), followed by iterative
refinement against the unregularized system. Cone algebra is vectorized
over groups of equal-dimension SOC blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .program import NONNEG, SOC, ConeBlock, ConicProgram, SolverSolution


@dataclass(frozen=True)
class SolverSettings:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 100
    reg: float = 1e-9            # static regularization of the KKT system
    refine_steps: int = 2
    step_damping: float = 0.99
    infeas_window: int = 10      # stalled iterations before declaring infeasible
    centrality_correctors: int = 2   # Gondzio corrector rounds per iteration
    stall_accept: float = 50.0   # gap-tolerance factor accepted at a hard stall
    trace: object = None         # optional callable(dict) per iteration


class _Cones:
    """Vectorized cone algebra over the inequality rows.

    Nonnegative coordinates are gathered into one index vector; SOC blocks
    are grouped by dimension into (n_blocks, dim) index matrices so all
    per-block formulas run as stacked numpy operations.
    """

    def __init__(self, cones: list[ConeBlock]):
        nn_idx = []
        soc_groups: dict[int, list[np.ndarray]] = {}
        start = 0
        for cb in cones:
            idx = np.arange(start, start + cb.dim)
            if cb.kind == NONNEG:
                nn_idx.append(idx)
            else:
                soc_groups.setdefault(cb.dim, []).append(idx)
            start += cb.dim
        self.dim = start
        self.nn = np.concatenate(nn_idx) if nn_idx else np.empty(0, dtype=int)
        self.soc = {d: np.vstack(rows) for d, rows in soc_groups.items()}
        self.n_soc = sum(v.shape[0] for v in self.soc.values())
        self.degree = self.nn.size + self.n_soc

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.nn] = 1.0
        for idx in self.soc.values():
            e[idx[:, 0]] = 1.0
        return e

    def interior_violation(self, u: np.ndarray) -> float:
        worst = -np.inf
        if self.nn.size:
            worst = max(worst, float(-u[self.nn].min()))
        for idx in self.soc.values():
            blocks = u[idx]
            margin = np.linalg.norm(blocks[:, 1:], axis=1) - blocks[:, 0]
            worst = max(worst, float(margin.max()))
        return worst

    def shift_into_interior(self, u: np.ndarray) -> np.ndarray:
        viol = self.interior_violation(u)
        if viol >= -math.sqrt(np.finfo(float).eps):
            return u + (1.0 + viol) * self.identity()
        return u

    def max_step(self, u: np.ndarray, du: np.ndarray) -> float:
        alpha = np.inf
        if self.nn.size:
            un, dn = u[self.nn], du[self.nn]
            neg = dn < 0
            if np.any(neg):
                alpha = min(alpha, float((-un[neg] / dn[neg]).min()))
        for idx in self.soc.values():
            ub, db = u[idx], du[idx]
            a = db[:, 0] ** 2 - np.sum(db[:, 1:] ** 2, axis=1)
            bq = 2.0 * (ub[:, 0] * db[:, 0] - np.sum(ub[:, 1:] * db[:, 1:], axis=1))
            cq = np.maximum(ub[:, 0] ** 2 - np.sum(ub[:, 1:] ** 2, axis=1), 0.0)
            disc = bq * bq - 4.0 * a * cq
            sq = np.sqrt(np.maximum(disc, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                r1 = np.where((np.abs(a) > 1e-14) & (disc >= 0), (-bq - sq) / (2 * a), np.inf)
                r2 = np.where((np.abs(a) > 1e-14) & (disc >= 0), (-bq + sq) / (2 * a), np.inf)
                rl = np.where((np.abs(a) <= 1e-14) & (np.abs(bq) > 1e-14), -cq / bq, np.inf)
                rt = np.where(db[:, 0] < 0, -ub[:, 0] / db[:, 0], np.inf)
            for roots in (r1, r2, rl, rt):
                pos = roots[roots > 1e-14]
                if pos.size:
                    alpha = min(alpha, float(pos.min()))
        return alpha

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.nn] = u[self.nn] * v[self.nn]
        for idx in self.soc.values():
            ub, vb = u[idx], v[idx]
            out[idx[:, 0]] = np.sum(ub * vb, axis=1)
            out.flat[idx[:, 1:]] = ub[:, :1] * vb[:, 1:] + vb[:, :1] * ub[:, 1:]
        return out

    def divide(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lam o x = d blockwise."""
        out = np.zeros(self.dim)
        out[self.nn] = d[self.nn] / lam[self.nn]
        for idx in self.soc.values():
            lb, db = lam[idx], d[idx]
            det = lb[:, 0] ** 2 - np.sum(lb[:, 1:] ** 2, axis=1)
            x0 = (lb[:, 0] * db[:, 0] - np.sum(lb[:, 1:] * db[:, 1:], axis=1)) / det
            out[idx[:, 0]] = x0
            out.flat[idx[:, 1:]] = (db[:, 1:] - x0[:, None] * lb[:, 1:]) / lb[:, :1]
        return out

    def clip_eigenvalues(self, v: np.ndarray, lo: float, hi: float) -> np.ndarray:
        """Project blockwise spectral values of v onto [lo, hi].

        Nonnegative coordinates clip directly; SOC blocks clip their two
        Jordan eigenvalues v0 +/- ||v1|| and are reassembled.
        """
        out = v.copy()
        out[self.nn] = np.clip(v[self.nn], lo, hi)
        for idx in self.soc.values():
            vb = v[idx]
            nv1 = np.linalg.norm(vb[:, 1:], axis=1)
            e1 = np.clip(vb[:, 0] + nv1, lo, hi)
            e2 = np.clip(vb[:, 0] - nv1, lo, hi)
            out[idx[:, 0]] = 0.5 * (e1 + e2)
            unit = np.divide(vb[:, 1:], nv1[:, None],
                             out=np.zeros_like(vb[:, 1:]),
                             where=nv1[:, None] > 1e-300)
            out.flat[idx[:, 1:]] = 0.5 * (e1 - e2)[:, None] * unit
        return out


class _NTScaling:
    """Nesterov-Todd scaling point: W z = W^{-1} s = lambda, W symmetric.

    SOC blocks use W = eta * Wbar with Wbar = [[w0, w1'], [w1, I + w1 w1'/(1+w0)]]
    built from the hyperbolic-unit vector wbar; the dense per-block matrices
    are stacked per dimension group and reused for every apply.
    """

    def __init__(self, cones: _Cones, s: np.ndarray, z: np.ndarray):
        self.cones = cones
        self.w_nn = np.sqrt(s[cones.nn] / z[cones.nn]) if cones.nn.size else np.empty(0)
        self.soc_mats: dict[int, np.ndarray] = {}
        self.soc_inv: dict[int, np.ndarray] = {}
        self.soc_sq: dict[int, np.ndarray] = {}
        for d, idx in cones.soc.items():
            sb, zb = s[idx], z[idx]
            rs = np.sqrt(np.maximum(sb[:, 0] ** 2 - np.sum(sb[:, 1:] ** 2, axis=1), 1e-300))
            rz = np.sqrt(np.maximum(zb[:, 0] ** 2 - np.sum(zb[:, 1:] ** 2, axis=1), 1e-300))
            s_bar = sb / rs[:, None]
            z_bar = zb / rz[:, None]
            gamma = np.sqrt((1.0 + np.sum(s_bar * z_bar, axis=1)) / 2.0)
            wbar = np.empty_like(sb)
            wbar[:, 0] = (s_bar[:, 0] + z_bar[:, 0]) / (2 * gamma)
            wbar[:, 1:] = (s_bar[:, 1:] - z_bar[:, 1:]) / (2 * gamma[:, None])
            eta = np.sqrt(rs / rz)
            n = idx.shape[0]
            W = np.empty((n, d, d))
            W[:, 0, 0] = wbar[:, 0]
            W[:, 0, 1:] = wbar[:, 1:]
            W[:, 1:, 0] = wbar[:, 1:]
            outer = wbar[:, 1:, None] * wbar[:, None, 1:]
            W[:, 1:, 1:] = np.eye(d - 1) + outer / (1.0 + wbar[:, 0])[:, None, None]
            Wmat = eta[:, None, None] * W
            self.soc_mats[d] = Wmat
            # W^{-1} = J Wbar J / eta with J = diag(1, -I).
            Winv = W.copy()
            Winv[:, 0, 1:] *= -1.0
            Winv[:, 1:, 0] *= -1.0
            self.soc_inv[d] = Winv / eta[:, None, None]
            self.soc_sq[d] = np.einsum("nij,njk->nik", Wmat, Wmat)

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        cn = self.cones
        out[cn.nn] = self.w_nn * u[cn.nn]
        for d, idx in cn.soc.items():
            out.flat[idx] = np.einsum("nij,nj->ni", self.soc_mats[d], u[idx])
        return out

    def apply_sq(self, u: np.ndarray) -> np.ndarray:
        """W^2 u."""
        out = np.zeros_like(u)
        cn = self.cones
        out[cn.nn] = (self.w_nn ** 2) * u[cn.nn]
        for d, idx in cn.soc.items():
            out.flat[idx] = np.einsum("nij,nj->ni", self.soc_sq[d], u[idx])
        return out

    def apply_inv(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros_like(u)
        cn = self.cones
        out[cn.nn] = u[cn.nn] / self.w_nn
        for d, idx in cn.soc.items():
            out.flat[idx] = np.einsum("nij,nj->ni", self.soc_inv[d], u[idx])
        return out

    def w2_entries(self, reg: float) -> np.ndarray:
        """Values of W^2 + reg I laid out to match the KKT sparsity pattern."""
        parts = [self.w_nn ** 2 + reg] if self.w_nn.size else []
        for d in self.cones.soc:
            blocks = self.soc_sq[d].copy()
            blocks[:, np.arange(d), np.arange(d)] += reg
            parts.append(blocks.reshape(-1))
        return np.concatenate(parts) if parts else np.empty(0)


def solve_robust(program: ConicProgram,
                 settings: SolverSettings = SolverSettings()) -> SolverSolution:
    """Solve with a deterministic fallback ladder of numerical settings.

    Degenerate transcriptions sit on a knife edge for any fixed combination
    of static regularization, refinement depth, and step damping; the ladder
    retries the same tolerances under different numerics. Infeasibility and
    unboundedness certificates are returned immediately without retries.
    """
    from dataclasses import replace

    ladder = (
        settings,
        replace(settings, reg=1e-10, refine_steps=2),
        replace(settings, reg=1e-8, refine_steps=3, step_damping=0.95),
        replace(settings, reg=1e-10, refine_steps=4, step_damping=0.9),
        replace(settings, reg=1e-7, refine_steps=4, step_damping=0.98),
    )
    last = None
    for variant in ladder:
        sol = solve(program, variant)
        if sol.status in ("optimal", "infeasible", "unbounded"):
            return sol
        last = sol
    return last


def _safe_identity(cones: _Cones) -> np.ndarray:
    u = np.zeros(cones.dim)
    u[cones.nn] = 1.0
    for idx in cones.soc.values():
        u[idx[:, 0]] = 1.0
    return u


def solve(program: ConicProgram,
          settings: SolverSettings = SolverSettings()) -> SolverSolution:
    """Solve the conic program; deterministic for identical inputs."""
    program.validate()
    n = program.n
    c = np.asarray(program.c, float)
    P = program.P.tocsr() if program.P is not None else None
    A = program.A.tocsr() if program.A is not None else sp.csr_matrix((0, n))
    b = np.asarray(program.b, float) if program.b is not None else np.zeros(0)
    G = program.G.tocsr() if program.G is not None else sp.csr_matrix((0, n))
    h = np.asarray(program.h, float) if program.h is not None else np.zeros(0)
    me, mi = A.shape[0], G.shape[0]
    cones = _Cones(program.cones)

    if mi == 0:
        return _solve_equality_only(program, c, P, A, b, settings)

    reg = settings.reg
    P_eff = P if P is not None else sp.csr_matrix((n, n))
    dim = n + me + mi
    top = sp.bmat([[P_eff + reg * sp.eye(n), A.T, G.T],
                   [A, -reg * sp.eye(me) if me else None, None]],
                  format="coo") if me else \
        sp.hstack([P_eff + reg * sp.eye(n), A.T, G.T], format="coo")
    Gcoo = G.tocoo()
    const_rows = np.concatenate([top.row, Gcoo.row + n + me])
    const_cols = np.concatenate([top.col, Gcoo.col])
    const_vals = np.concatenate([top.data, Gcoo.data])

    # Sparsity pattern of the -W^2 block: nonneg diagonal, dense SOC blocks,
    # in the same order w2_entries emits values.
    w2_rows = [cones.nn + n + me]
    w2_cols = [cones.nn + n + me]
    for idx in cones.soc.values():
        shifted = idx + n + me
        rr = np.repeat(shifted, idx.shape[1], axis=1)
        cc = np.tile(shifted, (1, idx.shape[1]))
        w2_rows.append(rr.reshape(-1))
        w2_cols.append(cc.reshape(-1))
    w2_rows = np.concatenate(w2_rows)
    w2_cols = np.concatenate(w2_cols)
    all_rows = np.concatenate([const_rows, w2_rows])
    all_cols = np.concatenate([const_cols, w2_cols])

    def factor(w2_vals: np.ndarray):
        vals = np.concatenate([const_vals, -w2_vals])
        K = sp.csc_matrix((vals, (all_rows, all_cols)), shape=(dim, dim))
        return spla.splu(K)

    def kkt_apply(xyz: np.ndarray, scaling: _NTScaling) -> np.ndarray:
        x_, y_, z_ = xyz[:n], xyz[n:n + me], xyz[n + me:]
        r1 = (P_eff @ x_) + A.T @ y_ + G.T @ z_
        r2 = A @ x_
        r3 = G @ x_ - scaling.apply_sq(z_)
        return np.concatenate([r1, r2, r3])

    def kkt_solve(lu, rhs: np.ndarray, scaling: _NTScaling) -> np.ndarray:
        sol = lu.solve(rhs)
        for _ in range(settings.refine_steps):
            sol = sol + lu.solve(rhs - kkt_apply(sol, scaling))
        return sol

    # Initial point: one KKT solve with W = I, then shift into the cones.
    ident = _NTScaling(cones, _safe_identity(cones), _safe_identity(cones))
    lu0 = factor(ident.w2_entries(reg))
    init = lu0.solve(np.concatenate([-c, b, h]))
    x = init[:n]
    y = init[n:n + me]
    z0 = init[n + me:]
    s = cones.shift_into_interior(-z0.copy())
    z = cones.shift_into_interior(z0.copy())
    if cones.interior_violation(s) >= 0:
        s = cones.identity()
    if cones.interior_violation(z) >= 0:
        z = cones.identity()

    e = cones.identity()
    best_res = np.inf
    growth_count = 0
    status = "max_iter"
    iters = 0
    candidate = None
    candidate_score = np.inf
    polish_left = 3
    stall_count = 0
    mu_prev = np.inf

    for iteration in range(1, settings.max_iter + 1):
        iters = iteration
        r_dual = (P_eff @ x) + c + A.T @ y + G.T @ z
        r_eq = A @ x - b
        r_ineq = G @ x + s - h
        gap = float(s @ z)
        mu = gap / cones.degree
        pobj = program.objective_value(x)

        pres = max(_norm_inf(r_eq) / max(1.0, _norm_inf(b)),
                   _norm_inf(r_ineq) / max(1.0, _norm_inf(h)))
        dres = _norm_inf(r_dual) / max(1.0, _norm_inf(c))
        rel_gap = gap / max(1.0, abs(pobj))

        if not np.isfinite(pres + dres + gap):
            status = "numerical_failure"
            break
        gap_ok = mu < settings.tol_gap or rel_gap < 0.1 * settings.tol_gap
        if pres < settings.tol_feas and dres < settings.tol_feas and gap_ok:
            # Tolerances met: polish a few more iterations while the KKT
            # score keeps dropping, then return the best iterate.
            score = max(pres, dres, mu)
            if score < candidate_score:
                candidate = (x.copy(), y.copy(), z.copy(), s.copy())
                candidate_score = score
            polish_left -= 1
            if polish_left <= 0 or score < 1e-3 * settings.tol_feas:
                status = "optimal"
                break
        elif candidate is not None:
            status = "optimal"
            break

        # Infeasibility: approximate Farkas certificate carried by the duals,
        # confirmed after sustained lack of progress.
        dual_scale = max(_norm_inf(z), _norm_inf(y), 1.0)
        farkas_res = _norm_inf(A.T @ y + G.T @ z) / dual_scale
        farkas_gap = (float(b @ y) + float(h @ z)) / dual_scale
        certificate = farkas_res < 1e-8 and farkas_gap < -1e-10
        total_res = max(pres, dres, mu)
        if total_res < best_res * 0.999:
            best_res = total_res
            growth_count = 0
        else:
            growth_count += 1
        if certificate and (growth_count >= 3 or farkas_gap < -1e-6):
            status = "infeasible"
            break
        if growth_count >= settings.infeas_window and mu > settings.tol_gap:
            status = "infeasible" if pres > 1e3 * settings.tol_feas \
                else "numerical_failure"
            break
        if pobj < -1e14 and pres < 1e-6:
            status = "unbounded"
            break
        if max(np.abs(x).max(), np.abs(z).max(initial=0.0)) > 1e16:
            status = "infeasible"
            break

        if gap <= 0.0 or cones.interior_violation(s) >= 0.0 \
                or cones.interior_violation(z) >= 0.0:
            status = "numerical_failure"
            break

        scaling = _NTScaling(cones, s, z)
        lam = scaling.apply(z)
        try:
            lu = factor(scaling.w2_entries(reg))
        except RuntimeError:
            status = "numerical_failure"
            break

        # Predictor (affine) direction.
        d_s = cones.product(lam, lam)
        rhs = np.concatenate([-r_dual, -r_eq,
                              -r_ineq + scaling.apply(cones.divide(lam, d_s))])
        sol = kkt_solve(lu, rhs, scaling)
        dx_a = sol[:n]
        dz_a = sol[n + me:]
        # Slack step from the primal row: keeps G x + s - h contracting
        # exactly even when the scaled-space formula would cancel.
        ds_a = -r_ineq - G @ dx_a

        ap_aff = min(1.0, cones.max_step(s, ds_a))
        ad_aff = min(1.0, cones.max_step(z, dz_a))
        gap_aff = float((s + ap_aff * ds_a) @ (z + ad_aff * dz_a))
        sigma = min((max(gap_aff, 0.0) / gap) ** 3, 1.0) if gap > 0 else 0.0

        # Corrector (combined) direction.
        corr = cones.product(scaling.apply_inv(ds_a), scaling.apply(dz_a))
        d_s = cones.product(lam, lam) - sigma * mu * e + corr
        rhs = np.concatenate([-r_dual, -r_eq,
                              -r_ineq + scaling.apply(cones.divide(lam, d_s))])
        sol = kkt_solve(lu, rhs, scaling)
        dx, dy = sol[:n], sol[n:n + me]
        dz = sol[n + me:]
        ds = -r_ineq - G @ dx

        def step_pair(ds_, dz_):
            ap = min(1.0, settings.step_damping * cones.max_step(s, ds_))
            ad = min(1.0, settings.step_damping * cones.max_step(z, dz_))
            # With a quadratic term the P dx cross-coupling re-pollutes the
            # dual equation under split steps; use a common length then.
            if P is not None:
                ap = ad = min(ap, ad)
            return ap, ad

        def centrality_ok(ap, ad, ds_, dz_):
            """Keep iterates in a wide central-path neighborhood: the worst
            blockwise complementarity eigenvalue must not collapse relative
            to the mean, or the next NT scaling becomes unusable."""
            sn = s + ap * ds_
            zn = z + ad * dz_
            gap_n = float(sn @ zn)
            if gap_n <= 0:
                return False
            mu_n = gap_n / cones.degree
            # Cheap proxy: plain products for orthant rows, per-cone inner
            # products for SOC blocks.
            worst = np.inf
            if cones.nn.size:
                worst = min(worst, float((sn[cones.nn] * zn[cones.nn]).min()))
            for idx in cones.soc.values():
                worst = min(worst, float(np.sum(sn[idx] * zn[idx], axis=1).min()))
            return worst >= 1e-4 * mu_n

        alpha_p, alpha_d = step_pair(ds, dz)
        for _ in range(30):
            if centrality_ok(alpha_p, alpha_d, ds, dz) or \
                    max(alpha_p, alpha_d) < 1e-8:
                break
            alpha_p *= 0.8
            alpha_d *= 0.8

        # Gondzio centrality correctors: push outlier complementarity
        # products toward the target, accepting a corrector only when it
        # enlarges the step.
        mu_target = max(sigma * mu, 1e-2 * mu)
        for _ in range(settings.centrality_correctors):
            if min(alpha_p, alpha_d) > 0.95:
                break
            ap_t = min(1.0, 1.5 * alpha_p + 0.3)
            ad_t = min(1.0, 1.5 * alpha_d + 0.3)
            v_trial = cones.product(scaling.apply_inv(s + ap_t * ds),
                                    scaling.apply(z + ad_t * dz))
            target = cones.clip_eigenvalues(v_trial, 0.1 * mu_target,
                                            10.0 * mu_target)
            d_corr = v_trial - target
            rhs_c = np.concatenate([np.zeros(n + me),
                                    scaling.apply(cones.divide(lam, d_corr))])
            sol_c = kkt_solve(lu, rhs_c, scaling)
            dx_c = sol_c[:n]
            dz_c = sol_c[n + me:]
            ds_c = -G @ dx_c
            ap_new, ad_new = step_pair(ds + ds_c, dz + dz_c)
            if min(ap_new, ad_new) <= min(alpha_p, alpha_d) * 1.01:
                break
            dx = dx + dx_c
            dy = dy + sol_c[n:n + me]
            dz = dz + dz_c
            ds = ds + ds_c
            alpha_p, alpha_d = ap_new, ad_new

        if settings.trace is not None:
            settings.trace(dict(iteration=iteration, mu=mu, pres=pres,
                                dres=dres, sigma=sigma, alpha_p=alpha_p,
                                alpha_d=alpha_d))
        # Hard stall: the direction no longer moves the iterate. When the
        # iterate is feasible to tolerance and the gap is within a bounded
        # factor of target, accept it (double-precision factorizations
        # cannot always close the last fraction on degenerate instances).
        if max(alpha_p, alpha_d) < 0.05 and mu > 0.9 * mu_prev:
            stall_count += 1
        else:
            stall_count = 0
        mu_prev = mu
        if stall_count >= 3 or not np.isfinite(alpha_p + alpha_d) \
                or max(alpha_p, alpha_d) < 1e-10:
            if pres < settings.tol_feas and dres < settings.tol_feas \
                    and mu < settings.stall_accept * settings.tol_gap:
                status = "optimal"
            else:
                status = "numerical_failure"
            break
        x = x + alpha_p * dx
        s = s + alpha_p * ds
        y = y + alpha_d * dy
        z = z + alpha_d * dz

    if candidate is not None:
        status = "optimal"
        x, y, z, s = candidate

    gap = float(s @ z)
    pobj = program.objective_value(x)
    r_eq = A @ x - b
    r_ineq = G @ x + s - h
    r_dual = (P_eff @ x) + c + A.T @ y + G.T @ z
    return SolverSolution(
        x=x, y=y, z=z, s=s, status=status, iterations=iters,
        objective=pobj, gap=gap,
        rel_gap=gap / max(1.0, abs(pobj)),
        primal_res=max(_norm_inf(r_eq) / max(1.0, _norm_inf(b)),
                       _norm_inf(r_ineq) / max(1.0, _norm_inf(h))),
        dual_res=_norm_inf(r_dual) / max(1.0, _norm_inf(c)),
    )


def _solve_equality_only(program: ConicProgram, c, P, A, b,
                         settings: SolverSettings) -> SolverSolution:
    """Direct KKT solve when there are no cone constraints."""
    n = program.n
    me = A.shape[0]
    P_eff = P if P is not None else sp.csr_matrix((n, n))
    if me == 0 and P is None:
        status = "unbounded" if np.any(c != 0) else "optimal"
        return SolverSolution(x=np.zeros(n), y=np.zeros(0), z=np.zeros(0),
                              s=np.zeros(0), status=status, iterations=0,
                              objective=program.obj_offset, gap=0.0, rel_gap=0.0,
                              primal_res=0.0, dual_res=_norm_inf(c))
    reg = settings.reg
    K = sp.bmat([[P_eff + reg * sp.eye(n), A.T],
                 [A, -reg * sp.eye(me) if me else None]], format="csc") \
        if me else (P_eff + reg * sp.eye(n)).tocsc()
    try:
        lu = spla.splu(K)
        sol = lu.solve(np.concatenate([-c, b]))
        for _ in range(2 * settings.refine_steps):
            r1 = -c - (P_eff @ sol[:n]) - (A.T @ sol[n:] if me else 0.0)
            r2 = b - A @ sol[:n] if me else np.zeros(0)
            sol = sol + lu.solve(np.concatenate([r1, r2]))
    except RuntimeError:
        return SolverSolution(x=np.zeros(n), y=np.zeros(me), z=np.zeros(0),
                              s=np.zeros(0), status="numerical_failure",
                              iterations=1, objective=math.nan, gap=math.nan,
                              rel_gap=math.nan, primal_res=math.nan,
                              dual_res=math.nan)
    x, y = sol[:n], sol[n:]
    r_dual = (P_eff @ x) + c + (A.T @ y if me else 0.0)
    r_eq = A @ x - b if me else np.zeros(0)
    pres = _norm_inf(r_eq) / max(1.0, _norm_inf(b))
    dres = _norm_inf(np.atleast_1d(r_dual)) / max(1.0, _norm_inf(c))
    ok = pres < settings.tol_feas * 100 and dres < settings.tol_feas * 100
    return SolverSolution(x=x, y=y, z=np.zeros(0), s=np.zeros(0),
                          status="optimal" if ok else "numerical_failure",
                          iterations=1, objective=program.objective_value(x),
                          gap=0.0, rel_gap=0.0, primal_res=pres, dual_res=dres)


def _norm_inf(v: np.ndarray) -> float:
    return float(np.abs(v).max()) if v.size else 0.0

"""Shared numerical test utilities: finite differences and random states."""

from __future__ import annotations

import numpy as np

from rlv_landing.params import VehicleParams


def central_diff_jacobian(fun, x, eps_scale=1e-6):
    """Central finite-difference Jacobian of fun: R^n -> R^m at x."""
    x = np.asarray(x, float)
    f0 = np.atleast_1d(fun(x))
    J = np.zeros((f0.size, x.size))
    for i in range(x.size):
        eps = eps_scale * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        J[:, i] = (np.atleast_1d(fun(xp)) - np.atleast_1d(fun(xm))) / (2 * eps)
    return J


def rel_jac_error(J_analytic, J_fd):
    """Max entry error relative to the Jacobian magnitude (floor 1)."""
    J_analytic = np.asarray(J_analytic, float)
    scale = max(1.0, np.abs(J_analytic).max())
    return np.abs(J_analytic - J_fd).max() / scale


def random_planner_node(rng, vp: VehicleParams) -> np.ndarray:
    """Random z = (r, v, m, T, Gamma) in the flight envelope, generic alpha."""
    r = np.array([rng.uniform(-2000, 2000), rng.uniform(-2000, 2000),
                  -rng.uniform(500, 8000)])
    speed = rng.uniform(30, 400)
    v_dir = _random_unit(rng)
    v_dir[2] = abs(v_dir[2])          # descending
    v = speed * v_dir / np.linalg.norm(v_dir)
    m = rng.uniform(26000, vp.m0)
    # Thrust roughly retro with a generic off-axis component.
    t_dir = -v / speed + 0.4 * _random_unit(rng)
    t_dir /= np.linalg.norm(t_dir)
    T = rng.uniform(0.5, 0.95) * vp.T_max * t_dir
    Gamma = np.linalg.norm(T) * rng.uniform(1.0, 1.1)
    return np.concatenate([r, v, [m], T, [Gamma]])


def random_tracker_state(rng, vp: VehicleParams) -> np.ndarray:
    """Random x = (r, v, m, theta, psi, Gamma) in the flight envelope."""
    r = np.array([rng.uniform(-2000, 2000), rng.uniform(-2000, 2000),
                  -rng.uniform(500, 8000)])
    speed = rng.uniform(30, 400)
    v_dir = _random_unit(rng)
    v_dir[2] = abs(v_dir[2])
    v = speed * v_dir / np.linalg.norm(v_dir)
    m = rng.uniform(26000, vp.m0)
    theta = rng.uniform(np.radians(55), np.radians(125))
    psi = rng.uniform(-np.radians(25), np.radians(25))
    Gamma = rng.uniform(0.45, 0.95) * vp.T_max
    return np.concatenate([r, v, [m, theta, psi, Gamma]])


def _random_unit(rng):
    u = rng.normal(size=3)
    return u / np.linalg.norm(u)

"""Sequential convex programming loop shared by the planner and tracker.

Each iteration linearizes about the current reference, builds a scaled convex
subproblem, solves it, and measures the soft trust-region cost J_tr (the
weighted squared deviation of the solution from the reference, in scaled
variables). Convergence is declared when J_tr drops below a threshold; the
converged subproblem solution is the answer.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import numpy as np

from .conic import ConicProgram, SolverSettings, SolverSolution, solve_robust


@dataclass(frozen=True)
class ScpSettings:
    eps_converge: float          # threshold on J_tr (dimensionless)
    max_iter: int
    W_tr: float                  # scalar trust-region weight on scaled deviations
    divergence_factor: float = 10.0   # J_tr growth triggering an abort


@dataclass(frozen=True)
class ScpIterationRecord:
    iteration: int
    J_tr: float
    objective: float
    solver_status: str
    solver_iterations: int
    millis: float


@dataclass
class ScpOutcome:
    converged: bool
    iterations: int
    reference: Any               # final reference (the converged solution)
    log: list[ScpIterationRecord] = field(default_factory=list)

    @property
    def total_millis(self) -> float:
        return sum(rec.millis for rec in self.log)


class ScpFailure(RuntimeError):
    """Subproblem solve failed or the iteration diverged."""

    def __init__(self, message: str, iteration: int,
                 log: list[ScpIterationRecord], status: str):
        super().__init__(f"SCP iteration {iteration}: {message}")
        self.iteration = iteration
        self.log = log
        self.status = status


class SubproblemAdapter(Protocol):
    """What the SCP loop needs from a problem family."""

    def build(self, reference: Any) -> ConicProgram: ...

    def reference_vector(self, reference: Any) -> np.ndarray: ...

    def decode(self, reference: Any, x_scaled: np.ndarray) -> Any: ...


def trust_region_cost(Z: np.ndarray, Z_ref: np.ndarray,
                      W_tr: float | np.ndarray) -> float:
    """Soft trust-region cost sum_k dZ_k' W dZ_k for stacked node variables."""
    dZ = np.asarray(Z, float) - np.asarray(Z_ref, float)
    if np.isscalar(W_tr):
        return float(W_tr) * float(np.sum(dZ * dZ))
    dZ = np.atleast_2d(dZ)
    return float(np.einsum("ki,ij,kj->", dZ, np.asarray(W_tr, float), dZ))


def add_trust_region(program: ConicProgram, x_ref_scaled: np.ndarray,
                     weight: float) -> None:
    """Fold J_tr = weight * ||x - x_ref||^2 into the (scaled) objective."""
    import scipy.sparse as sp

    n = program.n
    quad = 2.0 * weight * sp.eye(n, format="csc")
    program.P = quad if program.P is None else (program.P + quad).tocsc()
    program.c = np.asarray(program.c, float) - 2.0 * weight * x_ref_scaled
    program.obj_offset += weight * float(x_ref_scaled @ x_ref_scaled)


def run_scp(adapter: SubproblemAdapter, initial_reference: Any,
            settings: ScpSettings,
            solver_settings: SolverSettings = SolverSettings(),
            solve_fn: Callable[..., SolverSolution] = solve_robust) -> ScpOutcome:
    """Iterate build/solve/update until the trust-region cost converges.

    Raises ScpFailure when a subproblem is not solved to optimality or when
    J_tr grows by the divergence factor on consecutive iterations.
    """
    reference = initial_reference
    log: list[ScpIterationRecord] = []
    prev_jtr = None
    growth_count = 0

    for iteration in range(1, settings.max_iter + 1):
        t0 = time.perf_counter()
        program = adapter.build(reference)
        solution = solve_fn(program, solver_settings)
        millis = (time.perf_counter() - t0) * 1e3
        if solution.status != "optimal":
            log.append(ScpIterationRecord(iteration, float("nan"),
                                          solution.objective, solution.status,
                                          solution.iterations, millis))
            raise ScpFailure(f"subproblem solve returned {solution.status}",
                             iteration, log, solution.status)

        x_ref = adapter.reference_vector(reference)
        dx = solution.x - x_ref
        j_tr = settings.W_tr * float(dx @ dx)
        log.append(ScpIterationRecord(iteration, j_tr, solution.objective,
                                      solution.status, solution.iterations,
                                      millis))
        reference = adapter.decode(reference, solution.x)

        if j_tr < settings.eps_converge:
            return ScpOutcome(converged=True, iterations=iteration,
                              reference=reference, log=log)

        if prev_jtr is not None and j_tr > settings.divergence_factor * prev_jtr:
            growth_count += 1
            if growth_count >= 2:
                raise ScpFailure("trust-region cost diverging", iteration,
                                 log, "numerical_failure")
        else:
            growth_count = 0
        prev_jtr = j_tr

    return ScpOutcome(converged=False, iterations=settings.max_iter,
                      reference=reference, log=log)

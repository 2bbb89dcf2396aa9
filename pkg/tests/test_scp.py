"""SCP engine tests: trust-region cost, the loop contract on a linear
fixture (one-iteration convergence), logging discipline, and failure paths.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from rlv_landing.conic import ConeBlock, ConicProgram, NONNEG, make_scaling
from rlv_landing.scp import (
    ScpFailure,
    ScpSettings,
    add_trust_region,
    run_scp,
    trust_region_cost,
)


class TestTrustRegionCost:
    def test_zero_at_reference(self):
        Z = np.arange(12.0).reshape(3, 4)
        assert trust_region_cost(Z, Z, 0.5) == 0.0

    def test_unit_deviation(self):
        Z = np.zeros((1, 4))
        Z_ref = np.zeros((1, 4))
        Z[0, 0] = 1.0
        assert trust_region_cost(Z, Z_ref, 1.0) == 1.0

    def test_quadratic_homogeneity(self):
        rng = np.random.default_rng(3)
        Z_ref = rng.normal(size=(5, 4))
        dZ = rng.normal(size=(5, 4))
        j1 = trust_region_cost(Z_ref + dZ, Z_ref, 0.7)
        j2 = trust_region_cost(Z_ref + 2 * dZ, Z_ref, 0.7)
        assert j2 == pytest.approx(4 * j1, rel=1e-12)

    def test_matrix_weight(self):
        W = np.diag([1.0, 2.0, 3.0])
        Z_ref = np.zeros((2, 3))
        Z = np.ones((2, 3))
        assert trust_region_cost(Z, Z_ref, W) == pytest.approx(2 * 6.0)


class _LinearFixture:
    """A convex-from-the-start problem: min (x-3)^2 s.t. x >= 1, 'linearized'
    about any reference identically. SCP must converge in exactly one
    iteration because the subproblem does not depend on the reference."""

    def __init__(self, w_tr):
        self.w_tr = w_tr
        self.scaling = make_scaling(np.array([-10.0]), np.array([10.0]))

    def build(self, reference):
        prog = ConicProgram(
            c=np.array([-6.0 * 10.0]),           # d/dx of (x-3)^2 linear part, scaled
            P=sp.csr_matrix([[2.0 * 100.0]]),    # x = 10 * x_scaled
            G=sp.csr_matrix([[-10.0]]),
            h=np.array([-1.0]),
            cones=[ConeBlock(NONNEG, 1)],
            obj_offset=9.0,
        )
        prog.scaling = self.scaling
        add_trust_region(prog, self.reference_vector(reference), self.w_tr)
        return prog

    def reference_vector(self, reference):
        return self.scaling.scale(np.array([reference]))

    def decode(self, reference, x_scaled):
        return float(self.scaling.unscale(x_scaled)[0])


class TestRunScp:
    def test_linear_fixture_two_iterations(self):
        # Iteration 1 jumps to (nearly) the fixed point; iteration 2
        # re-solves to itself and the deviation cost vanishes.
        fixture = _LinearFixture(w_tr=1e-9)
        out = run_scp(fixture, 0.0, ScpSettings(1e-10, 10, 1e-9))
        assert out.converged
        assert out.iterations <= 2
        assert out.reference == pytest.approx(3.0, abs=1e-6)

    def test_log_discipline(self):
        fixture = _LinearFixture(w_tr=1e-9)
        out = run_scp(fixture, -5.0, ScpSettings(1e-10, 10, 1e-9))
        assert len(out.log) == out.iterations
        assert out.log[-1].J_tr < 1e-10
        assert all(rec.solver_status == "optimal" for rec in out.log)
        assert all(rec.millis >= 0 for rec in out.log)
        # Convergence flag matches the final trust-region cost.
        assert out.converged == (out.log[-1].J_tr < 1e-10)

    def test_infeasible_subproblem_raises(self):
        class Bad(_LinearFixture):
            def build(self, reference):
                prog = super().build(reference)
                # x >= 1 and x <= 0 simultaneously
                import scipy.sparse as sp2
                prog.G = sp2.csr_matrix([[-10.0], [10.0]])
                prog.h = np.array([-1.0, 0.0])
                prog.cones = [ConeBlock(NONNEG, 2)]
                return prog

        with pytest.raises(ScpFailure) as err:
            run_scp(Bad(1e-9), 0.0, ScpSettings(1e-10, 10, 1e-9))
        assert err.value.iteration == 1
        assert err.value.status in ("infeasible", "numerical_failure")

    def test_max_iter_not_converged(self):
        # A strong trust region freezes progress; the loop must stop at the
        # iteration budget and report not-converged.
        fixture = _LinearFixture(w_tr=1e3)
        out = run_scp(fixture, -8.0, ScpSettings(1e-12, 4, 1e3))
        assert not out.converged
        assert out.iterations == 4

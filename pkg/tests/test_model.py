# tests/test_model.py

import math
import unittest
import sys
import os

import numpy as np

# Adjust path to import hdvikit
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from hdvikit.algebra import TimeGrid
from hdvikit.model import (DiscreteSpace, ConstraintSet, ComplianceLaw, RelaxationKernel, LoadHistory,
                           HdviProblem, DerivedConstants, derived_constants, build_rod_example,
                           rod_exact_solution, project)
from hdvikit.errors import DimensionMismatch, ValidationError
from tests.utils import rod_problem


class TestDiscreteSpace(unittest.TestCase):
    """
    Unit tests for the DiscreteSpace class.
    Methods:
    - test_metric: G = D^T diag(q) D and the derived norms.
    - test_rank_deficient: A strain map with a zero column is rejected.
    - test_weights: Non-positive or mismatched weights are rejected.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting DiscreteSpace Class", end="", flush=True)

    def test_metric(self):
        D = np.array([[1.0, 0.0], [-1.0, 2.0]])
        q = np.array([2.0, 0.5])
        space = DiscreteSpace(D, q)
        np.testing.assert_allclose(space.v_metric, D.T @ np.diag(q) @ D)
        x = np.array([1.0, -1.0])
        self.assertAlmostEqual(space.v_norm(x), np.sqrt(x @ space.v_metric @ x))
        self.assertAlmostEqual(space.dual_norm(space.v_metric @ x), space.v_norm(x))
        np.testing.assert_allclose(space.strains(np.vstack([x, x])), np.vstack([D @ x, D @ x]))

    def test_rank_deficient(self):
        with self.assertRaises(ValidationError) as ctx:
            DiscreteSpace([[1.0, 0.0], [1.0, 0.0]], [1.0, 1.0])
        self.assertEqual(ctx.exception.field, "problem.strain_map")

    def test_weights(self):
        with self.assertRaises(ValidationError):
            DiscreteSpace(np.eye(2), [1.0, 0.0])
        with self.assertRaises(DimensionMismatch):
            DiscreteSpace(np.eye(2), [1.0, 1.0, 1.0])


class TestConstraintsAndCompliance(unittest.TestCase):
    """
    Unit tests for ConstraintSet and ComplianceLaw.
    Methods:
    - test_project: Clamping onto the bounded DOFs only.
    - test_project_contraction: Projection is 1-Lipschitz and idempotent on random vectors.
    - test_compliance_properties: The default law is Lipschitz, monotone and zero off contact on random pairs.
    - test_violation: Largest excess over the bounds.
    - test_invalid_constraints: Duplicates and out-of-range DOFs are rejected.
    - test_compliance_apply: P(z) = w c max(z, 0) on the contact DOFs.
    - test_compliance_directional: Directional derivative on both sides of and at the kink.
    - test_invalid_compliance: Negative stiffness is rejected.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting Constraints and Compliance", end="", flush=True)

    def setUp(self):
        self.U = ConstraintSet(3, [(2, 0.5), (0, -1.0)])

    def test_project(self):
        np.testing.assert_allclose(project(self.U, [0.0, 7.0, 1.0]), [-1.0, 7.0, 0.5])
        np.testing.assert_allclose(self.U.project([-2.0, 0.0, 0.2]), [-2.0, 0.0, 0.2])
        self.assertEqual(list(self.U.indices), [0, 2])
        self.assertFalse(self.U.zero_feasible)
        with self.assertRaises(DimensionMismatch):
            self.U.project([1.0, 2.0])

    def test_project_contraction(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            v, w = rng.standard_normal(3) * 3.0, rng.standard_normal(3) * 3.0
            pv, pw = project(self.U, v), project(self.U, w)
            self.assertLessEqual(np.linalg.norm(pv - pw), np.linalg.norm(v - w) + 1e-14)
            np.testing.assert_array_equal(project(self.U, pv), pv)
            self.assertEqual(self.U.violation(pv), 0.0)

    def test_compliance_properties(self):
        rng = np.random.default_rng(12)
        law = ComplianceLaw(1, [0], [2.5])
        r1 = rng.uniform(-5.0, 5.0, 10_000)
        r2 = rng.uniform(-5.0, 5.0, 10_000)
        p1, p2 = law.pressure(r1), law.pressure(r2)
        self.assertTrue(np.all(np.abs(p1 - p2) <= law.lipschitz * np.abs(r1 - r2) + 1e-12))
        self.assertTrue(np.all((p1 - p2) * (r1 - r2) >= 0.0))
        self.assertTrue(np.all(p1[r1 <= 0.0] == 0.0))
        self.assertTrue(np.all(p1 >= 0.0))

    def test_violation(self):
        self.assertEqual(self.U.violation([-1.0, 3.0, 0.5]), 0.0)
        self.assertAlmostEqual(self.U.violation([[-1.0, 0.0, 0.75], [0.0, 0.0, 0.0]]), 1.0)

    def test_invalid_constraints(self):
        with self.assertRaises(ValidationError):
            ConstraintSet(3, [(1, 0.0), (1, 1.0)])
        with self.assertRaises(ValidationError):
            ConstraintSet(3, [(3, 0.0)])
        with self.assertRaises(ValidationError):
            ConstraintSet(3, [(0, float('inf'))])

    def test_compliance_apply(self):
        law = ComplianceLaw(3, [1, 2], [10.0, 4.0], [0.5, 1.0])
        np.testing.assert_allclose(law.apply([5.0, 0.2, -1.0]), [0.0, 1.0, 0.0])
        self.assertEqual(law.lipschitz, 10.0)
        self.assertTrue(ComplianceLaw.none(3).is_zero)
        np.testing.assert_allclose(ComplianceLaw.none(3).apply([1.0, 1.0, 1.0]), np.zeros(3))

    def test_compliance_directional(self):
        law = ComplianceLaw(2, [0], [3.0])
        np.testing.assert_allclose(law.directional([1.0, 0.0], [-2.0, 5.0]), [-6.0, 0.0])
        np.testing.assert_allclose(law.directional([-1.0, 0.0], [2.0, 5.0]), [0.0, 0.0])
        np.testing.assert_allclose(law.directional([0.0, 0.0], [2.0, 0.0]), [6.0, 0.0])
        np.testing.assert_allclose(law.directional([0.0, 0.0], [-2.0, 0.0]), [0.0, 0.0])
        np.testing.assert_allclose(law.directional([1e-12, 0.0], [-2.0, 0.0], kink_tol=1e-10), [0.0, 0.0])
        self.assertEqual(list(law.kinks([1e-12, 0.0], 1e-10)), [0])
        self.assertEqual(list(law.kinks([0.1, 0.0], 1e-10)), [])

    def test_invalid_compliance(self):
        with self.assertRaises(ValidationError):
            ComplianceLaw(2, [0], [-1.0])
        with self.assertRaises(DimensionMismatch):
            ComplianceLaw(2, [0, 1], [1.0])


class TestKernelAndLoad(unittest.TestCase):
    """
    Unit tests for RelaxationKernel and LoadHistory.
    Methods:
    - test_constant_kernel: Sampled norm of a constant identity kernel.
    - test_exponential_kernel: Samples decay and the sup norm sits at t = 0.
    - test_table_kernel: Linear interpolation between tabulated matrices.
    - test_non_square: Non-square table entries name the offending field.
    - test_modulus: A declared modulus smaller than the actual variation is rejected.
    - test_safety_factor: The safety factor scales the sup norm.
    - test_load_interpolation: Linear interpolation and arithmetic of loads.
    - test_invalid_load: Mismatched or non-increasing tables are rejected.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting RelaxationKernel and LoadHistory", end="", flush=True)

    def setUp(self):
        self.grid = TimeGrid(1.0, 10)
        self.q = np.array([0.5, 2.0])

    def test_constant_kernel(self):
        kernel = RelaxationKernel.constant(np.eye(2), self.grid, self.q)
        self.assertAlmostEqual(kernel.sup_norm, 1.0)
        self.assertEqual(kernel.lags.shape, (11, 2, 2))
        self.assertFalse(kernel.is_zero)
        self.assertTrue(RelaxationKernel.zero(2, self.grid, self.q).is_zero)

    def test_exponential_kernel(self):
        kernel = RelaxationKernel.exponential(2.0 * np.eye(2), 3.0, self.grid, self.q)
        self.assertTrue(np.all(np.diff(kernel.sample_norms) < 0))
        self.assertAlmostEqual(kernel.sup_norm, 2.0)
        np.testing.assert_allclose(kernel(0.5), 2.0 * math.exp(-1.5) * np.eye(2))

    def test_table_kernel(self):
        kernel = RelaxationKernel.table([0.0, 1.0], [np.eye(2), 3.0 * np.eye(2)], self.grid, self.q)
        np.testing.assert_allclose(kernel(0.25), 1.5 * np.eye(2))
        np.testing.assert_allclose(kernel(5.0), 3.0 * np.eye(2))
        self.assertAlmostEqual(kernel.sup_norm, 3.0)

    def test_non_square(self):
        with self.assertRaises(ValidationError) as ctx:
            RelaxationKernel.table([0.0, 1.0], [np.ones((2, 3)), np.ones((2, 3))], self.grid, self.q)
        self.assertEqual(ctx.exception.field, "problem.kernel.matrices[0]")

    def test_modulus(self):
        with self.assertRaises(ValidationError) as ctx:
            RelaxationKernel.exponential(np.eye(2), 5.0, self.grid, self.q, modulus=0.1)
        self.assertEqual(ctx.exception.field, "problem.kernel.modulus")
        RelaxationKernel.exponential(np.eye(2), 5.0, self.grid, self.q, modulus=5.0)

    def test_safety_factor(self):
        kernel = RelaxationKernel.constant(np.eye(2), self.grid, self.q, safety_factor=1.5)
        self.assertAlmostEqual(kernel.sup_norm, 1.5)
        self.assertAlmostEqual(kernel.norm_at_zero, 1.5)

    def test_load_interpolation(self):
        load = LoadHistory([0.0, 1.0], [[0.0, 2.0], [1.0, 0.0]])
        np.testing.assert_allclose(load(0.25), [0.25, 1.5])
        np.testing.assert_allclose(load.on_grid(self.grid)[-1], [1.0, 0.0])
        combined = 2.0 * load - LoadHistory.constant([1.0, 1.0], 1.0)
        np.testing.assert_allclose(combined(0.5), [0.0, 1.0])
        np.testing.assert_allclose((-load)(1.0), [-1.0, 0.0])
        self.assertEqual(load.on_grid(self.grid).shape, (11, 2))
        sampled = LoadHistory.from_function(lambda t: [t, t * t], self.grid)
        np.testing.assert_allclose(sampled(0.3), [0.3, 0.09])
        np.testing.assert_allclose(sampled(0.25), [0.25, 0.065])

    def test_invalid_load(self):
        with self.assertRaises(DimensionMismatch):
            LoadHistory([0.0, 1.0], [[1.0, 2.0]])
        with self.assertRaises(ValidationError):
            LoadHistory([0.0, 0.0], [[1.0], [2.0]])
        with self.assertRaises(DimensionMismatch):
            LoadHistory.constant([1.0], 1.0) + LoadHistory.constant([1.0, 2.0], 1.0)


class TestHdviProblem(unittest.TestCase):
    """
    Unit tests for HdviProblem, derived constants and the rod example.
    Methods:
    - test_rod_operators: The rod has W = G, m_B = 1 and the load e_last.
    - test_rod_coercivity: m_B = 1 for every mesh from 1 to 64 elements.
    - test_rod_exact: The closed-form nodal values.
    - test_rod_constants: c = 1, K = e, T* = 1/2 and the Picard constants.
    - test_zero_kernel_constants: A zero kernel makes T* infinite.
    - test_step_contraction: (dt/2)||R(0)||/m_B for both rules.
    - test_non_coercive: A zero stiffness is rejected.
    - test_shape_checks: Mismatched stiffness and grids are rejected.
    - test_with_load: Swapping the load keeps operators and constants.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting HdviProblem Class", end="", flush=True)

    def setUp(self):
        self.problem = rod_problem(4, 10)

    def test_rod_operators(self):
        p = self.problem
        np.testing.assert_allclose(p.W, p.space.v_metric, atol=1e-12)
        self.assertAlmostEqual(p.m_B, 1.0, places=10)
        np.testing.assert_allclose(p.loads[0], [0.0, 0.0, 0.0, 1.0], atol=1e-12)
        self.assertEqual(p.n_dof, 4)
        self.assertAlmostEqual(p.space.v_norm(p.space.coordinates), 1.0)
        self.assertAlmostEqual(p.space.v_norm(np.ones(4)), 2.0)

    def test_rod_coercivity(self):
        grid = TimeGrid(1.0, 1)
        for n in range(1, 65):
            problem = build_rod_example(n, grid)
            self.assertEqual(problem.n_dof, n)
            self.assertAlmostEqual(problem.m_B, 1.0, delta=1e-10, msg=f"n_elements={n}")

    def test_rod_exact(self):
        exact = rod_exact_solution(self.problem)
        self.assertEqual(exact.shape, (11, 4))
        np.testing.assert_allclose(exact[0], [0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(exact[-1], np.exp(-1.0) * exact[0])

    def test_rod_constants(self):
        constants = derived_constants(self.problem)
        self.assertAlmostEqual(constants.c, 1.0, places=10)
        self.assertAlmostEqual(constants.K, math.e, places=8)
        self.assertAlmostEqual(constants.T_star, 0.5, places=10)
        self.assertFalse(constants.unbounded)
        self.assertEqual(constants.concatenation_windows, 3)
        self.assertEqual(constants.picard_power, 2)
        self.assertAlmostEqual(constants.q_bound_factor, 4.0, places=8)
        self.assertEqual(constants.to_dict()['picard_power'], 2)

    def test_zero_kernel_constants(self):
        constants = DerivedConstants(2.0, 0.0, 3.0)
        self.assertTrue(constants.unbounded)
        self.assertEqual(constants.T_star, math.inf)
        self.assertAlmostEqual(constants.K, 0.5)
        self.assertEqual(constants.picard_power, 1)
        self.assertAlmostEqual(constants.q_bound_factor, 1.0)
        self.assertEqual(constants.to_dict()['T_star'], 'inf')

    def test_step_contraction(self):
        self.assertAlmostEqual(self.problem.step_contraction(), 0.05, places=10)
        self.assertEqual(self.problem.step_contraction('left_rectangle'), 0.0)
        self.assertAlmostEqual(derived_constants(self.problem).step_contraction, 0.05, places=10)

    def test_non_coercive(self):
        p = self.problem
        with self.assertRaises(ValidationError) as ctx:
            HdviProblem(p.space, np.zeros((4, 4)), p.kernel, p.compliance, p.constraints, p.load, p.grid)
        self.assertEqual(ctx.exception.field, "problem.stiffness")

    def test_shape_checks(self):
        p = self.problem
        with self.assertRaises(DimensionMismatch):
            HdviProblem(p.space, np.eye(3), p.kernel, p.compliance, p.constraints, p.load, p.grid)
        with self.assertRaises(ValidationError):
            HdviProblem(p.space, np.eye(4), p.kernel, p.compliance, p.constraints, p.load, TimeGrid(1.0, 20))
        with self.assertRaises(ValidationError):
            build_rod_example(0, TimeGrid(1.0, 10))

    def test_with_load(self):
        p = self.problem
        other = p.with_load(p.load * 2.0)
        np.testing.assert_allclose(other.loads, 2.0 * p.loads)
        self.assertIs(other.W, p.W)
        self.assertEqual(other.m_B, p.m_B)
        np.testing.assert_allclose(p.loads[0], [0.0, 0.0, 0.0, 1.0], atol=1e-12)


if __name__ == '__main__':
    unittest.main()

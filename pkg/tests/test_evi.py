# tests/test_evi.py

import itertools
import logging
import unittest
import sys
import os

import numpy as np

# Adjust path to import hdvikit
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from hdvikit.algebra import TimeGrid
from hdvikit.evi import EviSolver, CriticalCone, ProjectedFixedPoint, FREE, NONPOSITIVE, ZERO
from hdvikit.errors import DimensionMismatch, InconsistentMultiplier, MaxIterations, NonFiniteIterate
from hdvikit.logs import setup_logging
from hdvikit.model import ComplianceLaw, ConstraintSet, DiscreteSpace, HdviProblem, LoadHistory, RelaxationKernel
from hdvikit.options import SolverOptions
from tests.utils import random_problem, temporary_directory


def small_problem(B, bounds=(), compliance=None):
    """Static problem with D = I and q = 1, so W = B and G = I."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[0]
    grid = TimeGrid(1.0, 1)
    space = DiscreteSpace(np.eye(n), np.ones(n))
    return HdviProblem(space, B, RelaxationKernel.zero(n, grid, np.ones(n)),
                       compliance or ComplianceLaw.none(n), ConstraintSet(n, bounds),
                       LoadHistory.constant(np.zeros(n), 1.0), grid)


def active_set_oracle(W, omega, indices, bounds):
    """Enumerates active sets of a box VI with an SPD matrix and returns the unique solution."""
    n = len(omega)
    for size in range(len(indices) + 1):
        for subset in itertools.combinations(range(len(indices)), size):
            S = [int(indices[k]) for k in subset]
            F = [i for i in range(n) if i not in S]
            z = np.zeros(n)
            z[S] = [bounds[k] for k in subset]
            if F:
                z[F] = np.linalg.solve(W[np.ix_(F, F)], omega[F] - W[np.ix_(F, S)] @ z[S])
            feasible = all(z[i] <= g + 1e-12 for i, g in zip(indices, bounds))
            zeta = omega - W @ z
            if feasible and all(zeta[i] >= -1e-12 for i in S):
                return z
    raise AssertionError("no active set satisfies the optimality conditions")


class TestEviSolve(unittest.TestCase):
    """
    Unit tests for the elliptic VI solution map.
    Methods:
    - test_active_set_oracle: Random instances match an exhaustive active-set solve.
    - test_start_independence: Random starting points give the same solution.
    - test_lipschitz_bound: ||F(w1) - F(w2)||_V <= ||w1 - w2||_V* / m_B on random pairs.
    - test_compliance: Normal compliance without a bound.
    - test_no_coupled_dofs: Unconstrained problems are a single linear solve.
    - test_max_iterations: The iteration cap raises MaxIterations.
    - test_bad_input: Wrong sizes and non-finite data are rejected.
    - test_logging: Logged calls reach the component log file.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting EviSolver Class", end="", flush=True)

    def test_active_set_oracle(self):
        rng = np.random.default_rng(2024)
        for seed in range(50):
            n_dof = int(rng.integers(4, 7))
            bounded = int(rng.integers(1, 4))
            problem = random_problem(seed, n_dof=n_dof, bounded=bounded, compliance=False)
            omega = rng.standard_normal(n_dof)
            result = EviSolver(problem).solve_evi(omega, tol=1e-12)
            expected = active_set_oracle(problem.W, omega, problem.constraints.indices, problem.constraints.bounds)
            np.testing.assert_allclose(result.z, expected, atol=1e-9, err_msg=f"seed {seed}")
            self.assertEqual(problem.constraints.violation(result.z), 0.0)
            self.assertLessEqual(result.residual, 1e-9)
            active = problem.constraints.indices[np.isclose(result.z[problem.constraints.indices], problem.constraints.bounds)]
            self.assertTrue(np.all(result.multiplier[active] >= -1e-9))

    def test_start_independence(self):
        rng = np.random.default_rng(31)
        for seed in range(10):
            problem = random_problem(seed, n_dof=5, bounded=3)
            solver = EviSolver(problem)
            omega = rng.standard_normal(5)
            first = solver.solve_evi(omega, z0=10.0 * rng.standard_normal(5), tol=1e-12)
            second = solver.solve_evi(omega, z0=10.0 * rng.standard_normal(5), tol=1e-12)
            np.testing.assert_allclose(first.z, second.z, atol=1e-9, err_msg=f"seed {seed}")

    def test_lipschitz_bound(self):
        rng = np.random.default_rng(32)
        for seed in range(20):
            problem = random_problem(seed, n_dof=5, bounded=2)
            solver = EviSolver(problem)
            space = problem.space
            for _ in range(5):
                omega_1, omega_2 = rng.standard_normal(5), rng.standard_normal(5)
                z_1 = solver.solve_evi(omega_1, tol=1e-12).z
                z_2 = solver.solve_evi(omega_2, tol=1e-12).z
                bound = space.dual_norm(omega_1 - omega_2) / problem.m_B
                self.assertLessEqual(space.v_norm(z_1 - z_2), bound + 1e-9, f"seed {seed}")

    def test_compliance(self):
        problem = small_problem([[1.0]], compliance=ComplianceLaw(1, [0], [10.0]))
        solver = EviSolver(problem)
        self.assertAlmostEqual(solver.solve_evi(np.array([1.1])).z[0], 0.1, places=8)
        self.assertAlmostEqual(solver.solve_evi(np.array([-1.0])).z[0], -1.0, places=8)

    def test_no_coupled_dofs(self):
        problem = small_problem([[2.0, 0.5], [0.5, 1.0]])
        result = EviSolver(problem).solve_evi(np.array([1.0, 2.0]))
        np.testing.assert_allclose(result.z, np.linalg.solve(problem.W, [1.0, 2.0]))
        self.assertEqual(result.iterations, 0)
        solver = ProjectedFixedPoint(np.eye(3), [])
        self.assertEqual(solver.contraction(), 0.0)
        tangent = EviSolver(problem).project_tangent(np.zeros(0, dtype=bool), np.array([1.0, 2.0]))
        np.testing.assert_allclose(tangent, [1.0, 2.0], atol=1e-12)

    def test_max_iterations(self):
        problem = small_problem([[2.0, 1.0], [1.0, 2.0]], bounds=[(0, 0.0), (1, 0.0)])
        solver = EviSolver(problem, SolverOptions(max_evi_iterations=1))
        with self.assertRaises(MaxIterations):
            solver.solve_evi(np.array([-1.0, -1.0]))
        result = EviSolver(problem).solve_evi(np.array([-1.0, -1.0]))
        np.testing.assert_allclose(result.z, [-1.0 / 3.0, -1.0 / 3.0], atol=1e-9)

    def test_bad_input(self):
        solver = EviSolver(small_problem(np.eye(2), bounds=[(0, 0.0)]))
        with self.assertRaises(DimensionMismatch):
            solver.solve_evi(np.ones(3))
        with self.assertRaises(NonFiniteIterate):
            solver.solve_evi(np.array([np.nan, 0.0]))
        with self.assertRaises(DimensionMismatch):
            solver.vi_residual(np.ones(2), np.ones(1))

    def test_logging(self):
        with temporary_directory() as tmp:
            logger = setup_logging('evi_test', log_dir=tmp)
            try:
                solver = EviSolver(small_problem(np.eye(2), bounds=[(0, 0.0)]), logger=logger)
                solver.solve_evi(np.array([1.0, 1.0]))
                with self.assertRaises(DimensionMismatch):
                    solver.solve_evi(np.ones(3))
                with open(os.path.join(tmp, 'evi_test_log.log')) as handle:
                    text = handle.read()
            finally:
                for handler in list(logger.handlers):
                    handler.close()
                    logger.removeHandler(handler)
        self.assertIn("Method Call: solve_evi", text)
        self.assertIn("Status: Success", text)
        self.assertIn("Error Type: DimensionMismatch", text)


class TestCriticalCone(unittest.TestCase):
    """
    Unit tests for the critical cone and the derivative solve.
    Methods:
    - test_tags: Free, zero and weakly active DOFs.
    - test_inconsistent_multiplier: Negative multipliers on active DOFs raise.
    - test_derivative_zero_cone: Strictly active DOFs do not move.
    - test_derivative_nonpositive_cone: Weakly active DOFs move one way only.
    - test_positive_homogeneity: F'(omega; 2d) = 2 F'(omega; d) on random instances.
    - test_project_tangent: V-metric projection onto the tangent cone, repeated calls reuse one factorization.
    - test_cone_helpers: Codes, per-DOF tags and projection of a cone.
    """
    @classmethod
    def setUpClass(cls):
        print("\nTesting CriticalCone Class", end="", flush=True)

    def setUp(self):
        self.problem = small_problem(np.eye(2), bounds=[(0, 0.0)])
        self.solver = EviSolver(self.problem)

    def _cone(self, omega):
        result = self.solver.solve_evi(np.asarray(omega, dtype=float))
        return result, self.solver.critical_cone(result.z, result.multiplier)

    def test_tags(self):
        _, cone = self._cone([-1.0, 0.0])
        self.assertEqual(cone.tags, (FREE,))
        self.assertTrue(cone.is_free)
        _, cone = self._cone([1.0, 0.5])
        self.assertEqual(cone.tags, (ZERO,))
        self.assertTrue(cone.is_linear)
        _, cone = self._cone([0.0, 0.5])
        self.assertEqual(cone.tags, (NONPOSITIVE,))
        self.assertEqual(cone.ambiguous, (0,))
        self.assertFalse(cone.is_linear)

    def test_inconsistent_multiplier(self):
        with self.assertRaises(InconsistentMultiplier):
            self.solver.critical_cone(np.zeros(2), np.array([-1.0, 0.0]))

    def test_derivative_zero_cone(self):
        result, cone = self._cone([1.0, 0.5])
        dz = self.solver.solve_evi_derivative(cone, result.z, np.array([3.0, -2.0]))
        np.testing.assert_allclose(dz, [0.0, -2.0], atol=1e-12)

    def test_derivative_nonpositive_cone(self):
        result, cone = self._cone([0.0, 0.5])
        up = self.solver.solve_evi_derivative(cone, result.z, np.array([1.0, 1.0]))
        down = self.solver.solve_evi_derivative(cone, result.z, np.array([-1.0, 1.0]))
        np.testing.assert_allclose(up, [0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(down, [-1.0, 1.0], atol=1e-12)
        self.assertLessEqual(self.solver.derivative_residual(cone, result.z, up, np.array([1.0, 1.0])), 1e-12)

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(7)
        for seed in range(10):
            problem = random_problem(100 + seed, n_dof=5, bounded=3)
            solver = EviSolver(problem)
            omega = rng.standard_normal(5)
            base = solver.solve_evi(omega, tol=1e-12)
            cone = solver.critical_cone(base.z, base.multiplier)
            d = rng.standard_normal(5)
            once = solver.solve_evi_derivative(cone, base.z, d, tol=1e-12)
            twice = solver.solve_evi_derivative(cone, base.z, 2.0 * d, tol=1e-12)
            np.testing.assert_allclose(twice, 2.0 * once, atol=1e-9)
            self.assertTrue(np.all(once[cone.indices] <= cone.upper[cone.indices]))

    def test_project_tangent(self):
        tangent_solver = self.solver._tangent_solver
        self.assertIsInstance(tangent_solver, ProjectedFixedPoint)
        np.testing.assert_allclose(self.solver.project_tangent(np.array([True]), np.array([1.0, 2.0])), [0.0, 2.0], atol=1e-12)
        np.testing.assert_allclose(self.solver.project_tangent(np.array([False]), np.array([1.0, 2.0])), [1.0, 2.0], atol=1e-12)
        np.testing.assert_allclose(self.solver.project_tangent(np.array([True]), np.array([-1.0, 2.0])), [-1.0, 2.0], atol=1e-12)
        self.assertIs(self.solver._tangent_solver, tangent_solver)

    def test_cone_helpers(self):
        cone = CriticalCone(4, [0, 2, 3], [FREE, NONPOSITIVE, ZERO])
        self.assertEqual(cone.codes(), [0, 1, 2])
        self.assertEqual(cone.tag(2), NONPOSITIVE)
        self.assertEqual(cone.tag(1), FREE)
        np.testing.assert_allclose(cone.project([1.0, 1.0, 1.0, 1.0]), [1.0, 1.0, 0.0, 0.0])
        self.assertEqual(cone, CriticalCone(4, [0, 2, 3], [FREE, NONPOSITIVE, ZERO]))
        self.assertTrue(CriticalCone.all_free(4, [1]).is_free)
        with self.assertRaises(DimensionMismatch):
            CriticalCone(4, [0, 1], [FREE])


if __name__ == '__main__':
    unittest.main()

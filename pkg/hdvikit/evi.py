"""
The elliptic variational inequality solution map and its directional derivative.

Both are box-constrained VIs  z in [lo, hi],  <A z + N(z) - w, v - z> >= 0,
solved by the projected fixed-point (Banach) iteration
z <- clamp(z - rho (A z + N(z) - w)) with rho = m / L^2.

Rows that carry no bound and no compliance are equations; they are eliminated
exactly (Schur complement) before iterating, so the iteration only runs on the
bounded and contact DOFs. This gives the same fixed point, and the contraction
factor sqrt(1 - m^2/L^2) is measured on the condensed operator.
"""
# Imports: Standard Library
import logging
from typing import Callable, Optional, Sequence, Tuple

# Imports: Third Party
import numpy as np
import scipy.linalg

# Imports: Local
from .errors import DimensionMismatch, InconsistentMultiplier, MaxIterations, NonFiniteIterate
from .logs import log_method_call
from .model import HdviProblem
from .options import SolverOptions

FREE = 'free'
NONPOSITIVE = 'nonpositive'
ZERO = 'zero'
TAG_CODES = {FREE: 0, NONPOSITIVE: 1, ZERO: 2}


class ProjectedFixedPoint:
    """
    Condensed projected fixed-point solver for one matrix and one set of coupled DOFs.

    Args:
        matrix (np.ndarray): A, with positive definite symmetric part.
        coupled (sequence): DOFs that carry a bound or a nonlinear term.
        max_iterations (int): Iteration cap.
    """
    def __init__(self, matrix: np.ndarray, coupled: Sequence[int], max_iterations: int = 10 ** 6):
        A = np.asarray(matrix, dtype=float)
        self.n = A.shape[0]
        self.coupled = np.array(sorted(set(int(i) for i in coupled)), dtype=int)
        mask = np.ones(self.n, dtype=bool)
        mask[self.coupled] = False
        self.uncoupled = np.flatnonzero(mask)
        self.max_iterations = int(max_iterations)
        K, I = self.coupled, self.uncoupled

        self._lu = scipy.linalg.lu_factor(A[np.ix_(I, I)]) if len(I) else None
        if len(K) and len(I):
            self._A_KI = A[np.ix_(K, I)]
            self._X = scipy.linalg.lu_solve(self._lu, A[np.ix_(I, K)])
            self.schur = A[np.ix_(K, K)] - self._A_KI @ self._X
        else:
            self._A_KI = np.zeros((len(K), 0))
            self._X = np.zeros((len(I), len(K)))
            self.schur = A[np.ix_(K, K)]

        if len(K):
            self.monotonicity = float(np.linalg.eigvalsh(0.5 * (self.schur + self.schur.T))[0])
            self.schur_norm = float(np.linalg.norm(self.schur, 2))
        else:
            self.monotonicity = 1.0
            self.schur_norm = 1.0

    def rho(self, lipschitz: float = 0.0) -> float:
        """Step m / L^2 with L = ||S||_2 + lipschitz."""
        return self.monotonicity / (self.schur_norm + lipschitz) ** 2

    def contraction(self, lipschitz: float = 0.0) -> float:
        L = self.schur_norm + lipschitz
        return float(np.sqrt(max(1.0 - (self.monotonicity / L) ** 2, 0.0)))

    def solve(self, omega: np.ndarray, lower: np.ndarray, upper: np.ndarray, tol: float,
              nonlinear: Optional[Callable[[np.ndarray], np.ndarray]] = None, lipschitz: float = 0.0,
              x0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, int]:
        """
        Solves the box VI.

        Args:
            omega (np.ndarray): Right-hand side.
            lower, upper (np.ndarray): Full-length bounds (+-inf where unbounded).
            tol (float): Stop once the fixed-point residual is below tol.
            nonlinear (callable, optional): Full-length monotone map supported on coupled DOFs.
            lipschitz (float, optional): Lipschitz constant of ``nonlinear``.
            x0 (np.ndarray, optional): Starting point.
        Returns:
            tuple: (solution, iterations).
        Raises:
            MaxIterations: If the cap is reached.
            NonFiniteIterate: If an iterate stops being finite.
        """
        K, I = self.coupled, self.uncoupled
        x = np.empty(self.n)
        base_I = scipy.linalg.lu_solve(self._lu, omega[I]) if len(I) else np.zeros(0)
        if not len(K):
            x[I] = base_I
            return x, 0

        omega_K = omega[K] - self._A_KI @ base_I
        lo, hi = lower[K], upper[K]
        rho = self.rho(lipschitz)
        z = np.clip(np.zeros(len(K)) if x0 is None else np.asarray(x0, dtype=float)[K], lo, hi)
        z = np.where(np.isfinite(z), z, 0.0)
        work = np.zeros(self.n)

        for iteration in range(1, self.max_iterations + 1):
            F = self.schur @ z - omega_K
            if nonlinear is not None:
                work[K] = z
                F = F + nonlinear(work)[K]
            z_new = np.clip(z - rho * F, lo, hi)
            if not np.all(np.isfinite(z_new)):
                raise NonFiniteIterate(f"iterate became non-finite after {iteration} iterations")
            step = np.linalg.norm(z_new - z) / rho
            z = z_new
            if step <= tol:
                break
        else:
            raise MaxIterations(f"projected fixed-point iteration did not reach {tol:.1e} in {self.max_iterations} iterations (last residual {step:.3e})")

        x[K] = z
        x[I] = base_I - self._X @ z
        return x, iteration


class EviResult:
    """
    Solution of one elliptic VI.

    Attributes:
        z (np.ndarray): Solution, feasible exactly.
        residual (float): Fixed-point residual at z.
        iterations (int): Projected iterations used.
        multiplier (np.ndarray): zeta = omega - (W + P)(z).
    """
    def __init__(self, z, residual, iterations, multiplier):
        self.z = z
        self.residual = residual
        self.iterations = iterations
        self.multiplier = multiplier

    def __repr__(self):
        return f"EviResult(residual={self.residual:.3e}, iterations={self.iterations})"


class CriticalCone:
    """
    Per-DOF description of the critical cone for a box set.

    Args:
        n_dof (int): Dimension of the space.
        indices (sequence): Bounded DOFs.
        tags (sequence): One of 'free', 'nonpositive', 'zero' per bounded DOF.
        ambiguous (sequence, optional): Bounded DOFs whose tag sits on a threshold tie.
    """
    def __init__(self, n_dof: int, indices: Sequence[int], tags: Sequence[str], ambiguous: Sequence[int] = ()):
        if len(indices) != len(tags):
            raise DimensionMismatch(f"{len(tags)} tags for {len(indices)} bounded DOFs")
        for tag in tags:
            if tag not in TAG_CODES:
                raise ValueError(f"unknown cone tag '{tag}'")
        self.n_dof = n_dof
        self.indices = np.asarray(indices, dtype=int)
        self.tags = tuple(tags)
        self.ambiguous = tuple(int(i) for i in ambiguous)
        lower = np.full(n_dof, -np.inf)
        upper = np.full(n_dof, np.inf)
        for i, tag in zip(self.indices, self.tags):
            if tag == NONPOSITIVE:
                upper[i] = 0.0
            elif tag == ZERO:
                lower[i] = upper[i] = 0.0
        self.lower = lower
        self.upper = upper

    @classmethod
    def all_free(cls, n_dof: int, indices: Sequence[int] = ()) -> 'CriticalCone':
        return cls(n_dof, indices, [FREE] * len(indices))

    def tag(self, dof: int) -> str:
        hits = np.flatnonzero(self.indices == dof)
        return self.tags[hits[0]] if len(hits) else FREE

    @property
    def is_free(self) -> bool:
        return all(tag == FREE for tag in self.tags)

    @property
    def is_linear(self) -> bool:
        """True when the cone is a subspace (no one-sided DOF)."""
        return NONPOSITIVE not in self.tags

    def project(self, d) -> np.ndarray:
        return np.clip(d, self.lower, self.upper)

    def codes(self) -> list:
        return [TAG_CODES[tag] for tag in self.tags]

    def __eq__(self, other):
        return isinstance(other, CriticalCone) and self.tags == other.tags and np.array_equal(self.indices, other.indices)

    def __repr__(self):
        return f"CriticalCone({dict(zip(self.indices.tolist(), self.tags))})"


class EviSolver:
    """
    Solution map F of the elliptic VI  z in U, <W z + P(z) - omega, v - z> >= 0,
    its directional derivative and the tangent-cone projection in the V metric.

    Args:
        problem (HdviProblem): Problem supplying W, P and U.
        options (SolverOptions, optional): Numeric settings.
        logger (logging.Logger, optional): Logger for method calls.
    """
    def __init__(self, problem: HdviProblem, options: Optional[SolverOptions] = None, logger: Optional[logging.Logger] = None):
        self.problem = problem
        self.options = options or SolverOptions()
        self.logger = logger
        self.n = problem.n_dof
        compliance = problem.compliance
        active_contact = compliance.dofs[compliance.stiffness > 0] if not compliance.is_zero else []
        coupled = set(problem.constraints.indices.tolist()) | set(int(i) for i in active_contact)
        self._solver = ProjectedFixedPoint(problem.W, coupled, self.options.max_evi_iterations)
        self._tangent_solver = ProjectedFixedPoint(problem.space.v_metric, problem.constraints.indices, self.options.max_evi_iterations)
        self.lipschitz = compliance.lipschitz * compliance.max_weight
        self.rho = self._solver.rho(self.lipschitz)
        self.contraction = self._solver.contraction(self.lipschitz)
        self._lower = np.full(self.n, -np.inf)
        self._upper = np.asarray(problem.constraints.upper)
        self._kink_tol = self.options.act_tol

    def _check(self, *vectors):
        for v in vectors:
            if np.shape(v) != (self.n,):
                raise DimensionMismatch(f"expected a vector of length {self.n}, got shape {np.shape(v)}")

    def _operator(self, z: np.ndarray) -> np.ndarray:
        return self.problem.W @ z + self.problem.compliance.apply(z)

    def solve(self, omega: np.ndarray, z0: Optional[np.ndarray] = None, tol: Optional[float] = None) -> EviResult:
        """Unlogged solve used inside the time-marching loops."""
        omega = np.asarray(omega, dtype=float)
        self._check(omega)
        if not np.all(np.isfinite(omega)):
            raise NonFiniteIterate("right-hand side is not finite")
        tol = self.options.tol if tol is None else tol
        compliance = self.problem.compliance
        z, iterations = self._solver.solve(
            omega, self._lower, self._upper, tol,
            nonlinear=None if compliance.is_zero else compliance.apply,
            lipschitz=self.lipschitz, x0=z0,
        )
        multiplier = omega - self._operator(z)
        return EviResult(z, self.residual(z, omega), iterations, multiplier)

    @log_method_call
    def solve_evi(self, omega: np.ndarray, z0: Optional[np.ndarray] = None, tol: Optional[float] = None) -> EviResult:
        """
        Computes z = F(omega).

        Args:
            omega (np.ndarray): Assembled right-hand side.
            z0 (np.ndarray, optional): Starting point, projected internally.
            tol (float, optional): Residual tolerance. Defaults to options.tol.
        Returns:
            EviResult: Solution, residual, iteration count and multiplier.
        Raises:
            MaxIterations: If the iteration cap is reached.
            NonFiniteIterate: If omega or an iterate is not finite.
        """
        return self.solve(omega, z0, tol)

    def residual(self, z: np.ndarray, omega: np.ndarray) -> float:
        r = self._operator(z) - omega
        projected = np.minimum(z - self.rho * r, self._upper)
        return float(np.linalg.norm(z - projected) / self.rho)

    @log_method_call
    def vi_residual(self, z: np.ndarray, omega: np.ndarray) -> float:
        """
        Fixed-point residual ||z - project(U, z - rho (W z + P(z) - omega))|| / rho.
        Zero exactly when z solves the VI.

        rho = m / L^2 is taken from the Schur complement of W on the bounded
        and compliant DOFs, not from the full W.
        """
        z = np.asarray(z, dtype=float)
        omega = np.asarray(omega, dtype=float)
        self._check(z, omega)
        return self.residual(z, omega)

    def thresholds(self, zeta: np.ndarray, act_tol: Optional[float] = None, mult_tol: Optional[float] = None) -> Tuple[np.ndarray, float]:
        act_tol = self.options.act_tol if act_tol is None else act_tol
        mult_tol = self.options.mult_tol if mult_tol is None else mult_tol
        tau_act = self.problem.constraints.activity_tolerance(act_tol)
        tau_mult = mult_tol * (1.0 + (float(np.max(np.abs(zeta))) if len(zeta) else 0.0))
        return tau_act, tau_mult

    @log_method_call
    def critical_cone(self, z: np.ndarray, zeta: np.ndarray, act_tol: Optional[float] = None, mult_tol: Optional[float] = None) -> CriticalCone:
        """
        Classifies each bounded DOF as free, nonpositive or zero.

        Args:
            z (np.ndarray): Feasible point.
            zeta (np.ndarray): Multiplier omega - (W + P)(z).
            act_tol (float, optional): Activity threshold (scaled by 1 + |g_i|).
            mult_tol (float, optional): Multiplier threshold (scaled by 1 + max|zeta|).
        Returns:
            CriticalCone: The classification; weakly active DOFs are listed as ambiguous.
        Raises:
            InconsistentMultiplier: If an active DOF has a clearly negative multiplier.
        """
        z = np.asarray(z, dtype=float)
        zeta = np.asarray(zeta, dtype=float)
        self._check(z, zeta)
        constraints = self.problem.constraints
        tau_act, tau_mult = self.thresholds(zeta, act_tol, mult_tol)
        tags, ambiguous = [], []
        for k, (i, g) in enumerate(zip(constraints.indices, constraints.bounds)):
            if g - z[i] > tau_act[k]:
                tags.append(FREE)
            elif abs(zeta[i]) <= tau_mult:
                tags.append(NONPOSITIVE)
                ambiguous.append(i)
            elif zeta[i] > 0:
                tags.append(ZERO)
            else:
                raise InconsistentMultiplier(f"active DOF {i} has multiplier {zeta[i]:.3e} < -{tau_mult:.1e}", dof=int(i))
        return CriticalCone(self.n, constraints.indices, tags, ambiguous)

    def solve_derivative_step(self, cone: CriticalCone, z: np.ndarray, d_omega: np.ndarray, tol: Optional[float] = None, d0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, int]:
        """Unlogged derivative solve returning (dz, iterations)."""
        tol = self.options.tol if tol is None else tol
        compliance = self.problem.compliance
        nonlinear = None
        if not compliance.is_zero:
            kink = self._kink_tol
            nonlinear = lambda d: compliance.directional(z, d, kink)
        dz, iterations = self._solver.solve(
            np.asarray(d_omega, dtype=float), cone.lower, cone.upper, tol,
            nonlinear=nonlinear, lipschitz=self.lipschitz, x0=d0,
        )
        return dz, iterations

    @log_method_call
    def solve_evi_derivative(self, cone: CriticalCone, z: np.ndarray, d_omega: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
        """
        Directional derivative dz = F'(omega; d_omega) at the base point z.

        Solves dz in C, <W dz + P'(z; dz) - d_omega, eta - dz> >= 0 for all eta in C.

        Args:
            cone (CriticalCone): Critical cone at (z, zeta).
            z (np.ndarray): Base solution.
            d_omega (np.ndarray): Direction of the right-hand side.
            tol (float, optional): Residual tolerance.
        Returns:
            np.ndarray: dz.
        """
        z = np.asarray(z, dtype=float)
        d_omega = np.asarray(d_omega, dtype=float)
        self._check(z, d_omega)
        if not np.all(np.isfinite(d_omega)):
            raise NonFiniteIterate("derivative right-hand side is not finite")
        return self.solve_derivative_step(cone, z, d_omega, tol)[0]

    def derivative_residual(self, cone: CriticalCone, z: np.ndarray, dz: np.ndarray, d_omega: np.ndarray) -> float:
        """Fixed-point residual of the cone VI at dz."""
        r = self.problem.W @ dz + self.problem.compliance.directional(z, dz, self._kink_tol) - d_omega
        projected = cone.project(dz - self.rho * r)
        return float(np.linalg.norm(dz - projected) / self.rho)

    def project_tangent(self, active: np.ndarray, functional: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
        """
        V-metric projection of G^{-1} functional onto the tangent cone {d : d_i <= 0 on active DOFs}.

        Args:
            active (np.ndarray): Boolean mask over the bounded DOFs.
            functional (np.ndarray): Dual vector.
            tol (float, optional): Residual tolerance.
        Returns:
            np.ndarray: The projected direction.
        """
        upper = np.full(self.n, np.inf)
        upper[self.problem.constraints.indices[np.asarray(active, dtype=bool)]] = 0.0
        tol = self.options.tol if tol is None else tol
        d, _ = self._tangent_solver.solve(np.asarray(functional, dtype=float), self._lower, upper, tol)
        return d

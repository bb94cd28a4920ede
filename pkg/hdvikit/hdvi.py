"""
Forward solver for the history-dependent VI: time marching, the operator
Lambda, Picard sweeps over whole trajectories and the equivalence checks
between the inequality and its fixed-point form.
"""
# Imports: Standard Library
import logging
from typing import Callable, Dict, Optional, Tuple

# Imports: Third Party
import numpy as np
from tqdm import tqdm

# Imports: Local
from .algebra import TimeGrid
from .errors import DegenerateDenominator, DimensionMismatch, MaxIterations, MaxSweeps, StepContractionViolated
from .evi import EviSolver
from .logs import log_method_call
from .model import HdviProblem, LoadHistory, derived_constants
from .options import SolverOptions
from .parallel import parallel_map


class Trajectory:
    """
    Displacement vectors on the nodes of a time grid.

    Args:
        grid (TimeGrid): The time grid.
        values (array-like): Shape (M+1, n_dof).
        meta (dict, optional): Per-node residuals, iteration counts and solver notes.
    """
    def __init__(self, grid: TimeGrid, values, meta: Optional[dict] = None):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != grid.steps + 1:
            raise DimensionMismatch(f"trajectory needs {grid.steps + 1} nodes, got values of shape {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.meta = meta or {}

    @classmethod
    def zeros(cls, grid: TimeGrid, n_dof: int) -> 'Trajectory':
        return cls(grid, np.zeros((grid.steps + 1, n_dof)))

    @property
    def n_dof(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, n):
        return self.values[n]

    def distance(self, other: 'Trajectory', problem: HdviProblem) -> float:
        """max over nodes of the V-norm of the difference."""
        return float(np.max(problem.space.metric.node_norms(self.values - other.values)))

    def __repr__(self):
        return f"Trajectory(nodes={self.values.shape[0]}, n_dof={self.values.shape[1]})"


class HistorySolver:
    """
    Solves u(t) = F(f(t) - eps*(int_0^t R(t-s) eps(u(s)) ds)) on a time grid.

    Args:
        problem (HdviProblem): The problem.
        options (SolverOptions, optional): Numeric settings.
        logger (logging.Logger, optional): Logger for method calls.
    """
    def __init__(self, problem: HdviProblem, options: Optional[SolverOptions] = None, logger: Optional[logging.Logger] = None):
        self.problem = problem
        self.options = options or SolverOptions()
        self.logger = logger
        self.evi = EviSolver(problem, self.options)
        self.memory = problem.memory(self.options.quadrature)
        self.constants = derived_constants(problem, self.options.quadrature)
        self._eps_adjoint = problem.space.eps_adjoint
        self._strain_map = problem.space.strain_map
        self._metric = problem.space.metric

    def check_step(self):
        """Raises StepContractionViolated when the trapezoid self-term loop is not contractive."""
        q = self.constants.step_contraction
        if q >= 1.0:
            needed = int(np.ceil(self.problem.grid.steps * q)) + 1
            raise StepContractionViolated(
                f"(dt/2)||R(0)||/m_B = {q:.3f} >= 1; use more than {needed} time steps",
                contraction=q,
            )

    def march(self, rhs: np.ndarray, step: Callable[[int, np.ndarray, Optional[np.ndarray]], Tuple[np.ndarray, object]], inner_tol: Optional[float] = None, desc: str = 'marching') -> Tuple[np.ndarray, np.ndarray, list]:
        """
        Generic time marching shared by the forward and derivative solvers.

        At node n the right-hand side is rhs[n] - eps*(memory); the memory over
        nodes 0..n-1 is fixed, the trapezoid self term is resolved by a
        fixed-point loop on the node value.

        Args:
            rhs (np.ndarray): Right-hand sides on the grid, shape (M+1, n_dof).
            step (callable): (n, omega, start) -> (value, info) solving one node.
            inner_tol (float, optional): Self-term loop tolerance. Defaults to options.inner_tol.
            desc (str, optional): Progress bar label.
        Returns:
            tuple: (values, inner iteration counts, per-node info).
        """
        self.check_step()
        grid = self.problem.grid
        n_dof = self.problem.n_dof
        values = np.zeros((grid.steps + 1, n_dof))
        strains = np.zeros((grid.steps + 1, self.memory.strain_dim))
        inner = np.zeros(grid.steps + 1, dtype=int)
        infos = []
        with_self = self.memory.self_weight > 0.0 and not self.memory.is_zero
        inner_tol = self.options.inner_tol if inner_tol is None else inner_tol

        for n in tqdm(range(grid.steps + 1), desc=desc, disable=not self.options.progress):
            base = rhs[n] - self._eps_adjoint @ self.memory.history_term(strains, n)
            x = values[n - 1] if n else None
            if n == 0 or not with_self:
                x, info = step(n, base, x)
                count = 1
            else:
                previous = np.inf
                for count in range(1, self.options.inner_max_iterations + 1):
                    omega = base - self._eps_adjoint @ self.memory.self_term(self._strain_map @ x)
                    x_new, info = step(n, omega, x)
                    change = self._metric.norm(x_new - x)
                    x = x_new
                    if change <= inner_tol:
                        break
                    # stalled at the accuracy of the node solves
                    if change >= previous and change <= 100.0 * inner_tol:
                        break
                    previous = change
                else:
                    raise MaxIterations(f"self-term loop at node {n} did not settle within {self.options.inner_max_iterations} iterations (last change {change:.3e})")
            values[n] = x
            strains[n] = self._strain_map @ x
            inner[n] = count
            infos.append(info)
        return values, inner, infos

    @log_method_call
    def solve_forward(self, tol: Optional[float] = None, loads: Optional[np.ndarray] = None) -> Trajectory:
        """
        Marches the problem over the grid.

        Args:
            tol (float, optional): Tolerance; the per-node VI and self-term loop use tol * inner_tol_factor.
            loads (np.ndarray, optional): Assembled loads on the grid replacing the problem load.
        Returns:
            Trajectory: Feasible nodal solutions with per-node residuals and iteration counts.
        Raises:
            StepContractionViolated: If the step is too large for the trapezoid self term.
        """
        tol = self.options.tol if tol is None else tol
        evi_tol = tol * self.options.inner_tol_factor

        def step(n, omega, start):
            result = self.evi.solve(omega, start, evi_tol)
            return result.z, result

        values, inner, results = self.march(self._loads(loads), step, inner_tol=evi_tol, desc='forward')
        meta = {
            'vi_residuals': np.array([r.residual for r in results]),
            'inner_iterations': inner,
            'evi_iterations': np.array([r.iterations for r in results]),
            'quadrature': self.options.quadrature,
        }
        return Trajectory(self.problem.grid, values, meta)

    def memory_rhs(self, u: Trajectory, loads: Optional[np.ndarray] = None) -> np.ndarray:
        """omega_n = f_n - eps*(memory of u up to t_n) on every node, memory with the full given history."""
        loads = self.problem.loads if loads is None else loads
        strains = self.problem.space.strains(u.values)
        memory = np.array([self.memory.total(strains, n) for n in range(self.problem.grid.steps + 1)])
        return loads - memory @ self._eps_adjoint.T

    def _lambda_values(self, u: Trajectory, tol: float) -> np.ndarray:
        omegas = self.memory_rhs(u)
        starts = u.values
        return np.array(parallel_map(
            lambda n: self.evi.solve(omegas[n], starts[n], tol).z,
            range(len(omegas)), threads=self.options.threads,
        ))

    @log_method_call
    def apply_lambda(self, u: Trajectory, tol: Optional[float] = None) -> Trajectory:
        """
        Evaluates (Lambda u)_n = F(f_n - eps*(memory of u up to t_n)).

        Args:
            u (Trajectory): Argument on the problem grid.
            tol (float, optional): VI tolerance.
        Returns:
            Trajectory: Lambda u.
        """
        self._check_grid(u)
        tol = self.options.inner_tol if tol is None else tol
        return Trajectory(self.problem.grid, self._lambda_values(u, tol))

    @log_method_call
    def solve_picard(self, u0: Optional[Trajectory] = None, tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> Trajectory:
        """
        Iterates u <- Lambda u until the sup-node change drops below tol.

        Args:
            u0 (Trajectory, optional): Starting trajectory. Defaults to zero.
            tol (float, optional): Stopping tolerance on the change.
            max_sweeps (int, optional): Sweep cap.
        Returns:
            Trajectory: The limit, with 'sweeps', 'changes' and 'ratios' in meta.
        Raises:
            MaxSweeps: If the cap is reached.
        """
        tol = self.options.tol if tol is None else tol
        max_sweeps = self.options.max_sweeps if max_sweeps is None else max_sweeps
        u = Trajectory.zeros(self.problem.grid, self.problem.n_dof) if u0 is None else u0
        self._check_grid(u)
        evi_tol = tol * self.options.inner_tol_factor
        changes = []

        for sweep in tqdm(range(1, max_sweeps + 1), desc='picard', disable=not self.options.progress):
            new = self._lambda_values(u, evi_tol)
            changes.append(float(np.max(self._metric.node_norms(new - u.values))))
            u = Trajectory(self.problem.grid, new)
            if self.logger:
                self.logger.info(f"Picard sweep {sweep}: change {changes[-1]:.3e}")
            # Lambda is constant without memory: one sweep reaches the fixed point
            if changes[-1] <= tol or self.memory.is_zero:
                break
        else:
            raise MaxSweeps(f"Picard iteration did not reach {tol:.1e} in {max_sweeps} sweeps (last change {changes[-1]:.3e})", changes=changes[-5:])

        ratios = [b / a if a > 0 else 0.0 for a, b in zip(changes[:-1], changes[1:])]
        u.meta = {
            'sweeps': sweep,
            'changes': np.array(changes),
            'ratios': np.array(ratios),
            'picard_constants': list(self.constants.picard_constants),
        }
        return u

    @log_method_call
    def equivalence_check(self, u: Trajectory) -> Dict[str, object]:
        """
        Residuals of u as a solution of the inequality and of the fixed-point equation.

        Args:
            u (Trajectory): Feasible trajectory on the problem grid.
        Returns:
            dict: max_vi_residual, max_fixedpoint_residual and the per-node arrays.
        """
        self._check_grid(u)
        omegas = self.memory_rhs(u)
        vi = np.array([self.evi.residual(u.values[n], omegas[n]) for n in range(len(u))])
        lam = self._lambda_values(u, self.options.inner_tol)
        fp = self._metric.node_norms(u.values - lam)
        return {
            'max_vi_residual': float(np.max(vi)),
            'max_fixedpoint_residual': float(np.max(fp)),
            'vi_residuals': vi,
            'fixedpoint_residuals': fp,
        }

    @log_method_call
    def lipschitz_probe(self, f_tilde: LoadHistory, tol: Optional[float] = None, base: Optional[Trajectory] = None) -> Dict[str, float]:
        """
        Compares ||u - u~||_C(V) / ||f - f~||_C(V*) with the Lipschitz bound K.

        Args:
            f_tilde (LoadHistory): Perturbed load.
            tol (float, optional): Solver tolerance.
            base (Trajectory, optional): Already computed solution for the unperturbed load.
        Returns:
            dict: ratio, bound K, numerator and denominator.
        Raises:
            DegenerateDenominator: If the loads coincide on the grid.
        """
        other_problem = self.problem.with_load(f_tilde)
        diff = self.problem.loads - other_problem.loads
        if not np.any(diff):
            raise DegenerateDenominator("perturbed load equals the load on every grid node")
        denominator = float(np.max(self._metric.node_dual_norms(diff)))
        if denominator == 0.0:
            raise DegenerateDenominator("load difference has zero dual norm")

        u = base if base is not None else self.solve_forward(tol)
        u_tilde = HistorySolver(other_problem, self.options).solve_forward(tol)
        numerator = u.distance(u_tilde, self.problem)
        return {
            'ratio': numerator / denominator,
            'bound': self.constants.K,
            'numerator': numerator,
            'denominator': denominator,
        }

    def _loads(self, loads: Optional[np.ndarray]) -> np.ndarray:
        if loads is None:
            return self.problem.loads
        loads = np.asarray(loads, dtype=float)
        if loads.shape != self.problem.loads.shape:
            raise DimensionMismatch(f"loads have shape {loads.shape}, expected {self.problem.loads.shape}")
        return loads

    def _check_grid(self, u: Trajectory):
        if u.grid != self.problem.grid or u.n_dof != self.problem.n_dof:
            raise DimensionMismatch(f"trajectory {u} does not live on the problem grid/space")

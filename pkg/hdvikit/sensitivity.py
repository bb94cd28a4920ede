"""
Directional derivative of the solution operator f -> u and its validation by
difference quotients.
"""
# Imports: Standard Library
import logging
import math
from typing import Dict, List, Optional, Sequence, Union

# Imports: Third Party
import numpy as np

# Imports: Local
from .algebra import TimeGrid, lrho_norm
from .errors import DimensionMismatch, ValidationError
from .evi import CriticalCone
from .hdvi import HistorySolver, Trajectory
from .logs import log_method_call
from .model import HdviProblem, LoadHistory
from .options import SolverOptions
from .parallel import parallel_map


class DerivativeTrajectory(Trajectory):
    """
    Nodal values of the directional derivative together with the frozen cones.

    Args:
        grid (TimeGrid): The time grid.
        values (array-like): delta u per node.
        cones (list): One CriticalCone per node.
        meta (dict, optional): Per-node residuals and flagged (weakly active) nodes.
    """
    def __init__(self, grid: TimeGrid, values, cones: List[CriticalCone], meta: Optional[dict] = None):
        super().__init__(grid, values, meta)
        if len(cones) != grid.steps + 1:
            raise DimensionMismatch(f"need one cone per node, got {len(cones)}")
        self.cones = list(cones)

    @property
    def is_linear(self) -> bool:
        return all(cone.is_linear for cone in self.cones) and not self.meta.get('kink_nodes')


LoadLike = Union[LoadHistory, np.ndarray]


class SensitivitySolver:
    """
    Solves the derivative equation along a base trajectory and checks it
    against difference quotients of the forward solver.

    Args:
        problem (HdviProblem): The problem.
        options (SolverOptions, optional): Numeric settings.
        logger (logging.Logger, optional): Logger for method calls.
    """
    def __init__(self, problem: HdviProblem, options: Optional[SolverOptions] = None, logger: Optional[logging.Logger] = None):
        self.problem = problem
        self.options = options or SolverOptions()
        self.logger = logger
        self.history = HistorySolver(problem, self.options)
        self.evi = self.history.evi
        self.constants = self.history.constants

    def _on_grid(self, load: LoadLike) -> np.ndarray:
        values = load.on_grid(self.problem.grid) if isinstance(load, LoadHistory) else np.asarray(load, dtype=float)
        if values.shape != self.problem.loads.shape:
            raise DimensionMismatch(f"direction has shape {values.shape}, expected {self.problem.loads.shape}")
        return values

    def base_cones(self, base: Trajectory) -> Dict[str, object]:
        """Critical cones of every node of the base trajectory, with the weakly active and kink nodes."""
        omegas = self.history.memory_rhs(base)
        compliance = self.problem.compliance
        cones, flagged, kinks = [], [], []
        for n, u_n in enumerate(base.values):
            zeta = omegas[n] - (self.problem.W @ u_n + compliance.apply(u_n))
            cone = self.evi.critical_cone(u_n, zeta)
            cones.append(cone)
            if cone.ambiguous:
                flagged.append(n)
            if len(compliance.kinks(u_n, self.options.act_tol)):
                kinks.append(n)
        return {'cones': cones, 'flagged_nodes': flagged, 'kink_nodes': kinks}

    @log_method_call
    def solve_derivative(self, base: Trajectory, d_load: LoadLike, tol: Optional[float] = None) -> DerivativeTrajectory:
        """
        Marches the derivative equation along ``base``.

        Per node: cone from (u_n, zeta_n), right-hand side
        d_f_n - eps*(memory of delta u), and delta u_n from the cone VI.

        Args:
            base (Trajectory): Converged forward solution.
            d_load (LoadHistory | np.ndarray): Load direction.
            tol (float, optional): Tolerance.
        Returns:
            DerivativeTrajectory: delta u with cones and per-node residuals.
        """
        tol = self.options.tol if tol is None else tol
        evi_tol = tol * self.options.inner_tol_factor
        rhs = self._on_grid(d_load)
        frozen = self.base_cones(base)
        cones = frozen['cones']

        def step(n, omega, start):
            return self.evi.solve_derivative_step(cones[n], base.values[n], omega, evi_tol, start)

        values, inner, _ = self.history.march(rhs, step, inner_tol=evi_tol, desc='derivative')
        omegas = self.history.memory_rhs(Trajectory(self.problem.grid, values), loads=rhs)
        residuals = np.array([
            self.evi.derivative_residual(cones[n], base.values[n], values[n], omegas[n])
            for n in range(len(values))
        ])
        meta = {
            'residuals': residuals,
            'inner_iterations': inner,
            'flagged_nodes': frozen['flagged_nodes'],
            'kink_nodes': frozen['kink_nodes'],
        }
        return DerivativeTrajectory(self.problem.grid, values, cones, meta)

    def _solve_shifted(self, load: LoadHistory, tol: float) -> Trajectory:
        return HistorySolver(self.problem.with_load(load), self.options).solve_forward(tol)

    def _quotient_error(self, base: Trajectory, du: Trajectory, shifted: Trajectory, tau: float, rho: float) -> float:
        quotient = (shifted.values - base.values) / tau
        norms = self.problem.space.metric.node_norms(quotient - du.values)
        return lrho_norm(norms, self.problem.grid.dt, rho)

    def amplification(self, rho: float) -> float:
        """1 + c T^{1/rho} ((e^{c rho' T} - 1)/(c rho'))^{1/rho'}, rho' the conjugate exponent."""
        c, T = self.constants.c, self.problem.grid.t_end
        if c == 0.0:
            return 1.0
        rho_c = rho / (rho - 1.0)
        return 1.0 + c * T ** (1.0 / rho) * (math.expm1(c * rho_c * T) / (c * rho_c)) ** (1.0 / rho_c)

    def _prepare(self, d_load: LoadLike, rho: float, tol: Optional[float], base: Optional[Trajectory]):
        if not 1.0 < rho < math.inf:
            raise ValidationError(f"exponent must lie in (1, inf), got {rho}", field="sensitivity.exponent")
        tol = self.options.tol if tol is None else tol
        direction = d_load if isinstance(d_load, LoadHistory) else LoadHistory.on_nodes(self.problem.grid, d_load)
        self._on_grid(direction)
        base = base if base is not None else self.history.solve_forward(tol)
        du = self.solve_derivative(base, direction, tol)
        return tol, direction, base, du

    @log_method_call
    def fd_validate(self, d_load: LoadLike, taus: Sequence[float], rho: float = 2.0, tol: Optional[float] = None, base: Optional[Trajectory] = None) -> Dict[str, object]:
        """
        L^rho(0,T;V) distance between difference quotients (S(f + tau d_f) - S(f))/tau and delta u.

        Args:
            d_load (LoadHistory | np.ndarray): Load direction.
            taus (sequence): Strictly decreasing positive step sizes.
            rho (float, optional): Exponent in (1, inf). Defaults to 2.
            tol (float, optional): Solver tolerance.
            base (Trajectory, optional): Precomputed base solution.
        Returns:
            dict: errors, monotone, final_ok, passes, floor, amplification, derivative.
        """
        taus = [float(t) for t in taus]
        if not taus or any(t <= 0 for t in taus) or any(b >= a for a, b in zip(taus, taus[1:])):
            raise ValidationError(f"taus must be positive and strictly decreasing, got {taus}", field="sensitivity.taus")
        tol, direction, base, du = self._prepare(d_load, rho, tol, base)

        def error_at(tau):
            shifted = self._solve_shifted(self.problem.load + tau * direction, tol)
            return self._quotient_error(base, du, shifted, tau, rho)

        errors = parallel_map(error_at, taus, threads=self.options.threads, progress=self.options.progress, desc='fd_validate')
        floor = 10.0 * tol
        monotone = all(b <= max(a, floor) for a, b in zip(errors, errors[1:]))
        final_ok = errors[-1] <= max(floor, errors[0] / 10.0)
        return {
            'taus': taus,
            'errors': errors,
            'monotone': monotone,
            'final_ok': final_ok,
            'passes': monotone and final_ok,
            'floor': floor,
            'amplification': self.amplification(rho),
            'derivative': du,
        }

    @log_method_call
    def hadamard_probe(self, d_load: LoadLike, perturbations: Sequence[LoadHistory], taus: Sequence[float], rho: float = 2.0, tol: Optional[float] = None, base: Optional[Trajectory] = None) -> Dict[str, object]:
        """
        Difference quotients along the diagonal (tau_k, z_k) with z_k -> d_f.

        Each member is compared with the plain difference quotient at the same
        tau and with the bound fd_k + T^{1/rho} K ||z_k - d_f||_{C(V*)}.

        Args:
            d_load (LoadHistory | np.ndarray): Load direction.
            perturbations (sequence): Perturbed directions z_k.
            taus (sequence): Positive step sizes, one per perturbation.
            rho (float, optional): Exponent. Defaults to 2.
            tol (float, optional): Solver tolerance.
            base (Trajectory, optional): Precomputed base solution.
        Returns:
            dict: errors, fd_errors, distances, bounds, within_bound, converged.
        """
        taus = [float(t) for t in taus]
        if len(taus) != len(perturbations) or not taus or any(t <= 0 for t in taus):
            raise ValidationError(f"need one positive tau per perturbation, got {len(taus)} for {len(perturbations)}", field="sensitivity.taus")
        tol, direction, base, du = self._prepare(d_load, rho, tol, base)
        d_values = direction.on_grid(self.problem.grid)
        metric = self.problem.space.metric

        def member(k):
            tau, z = taus[k], perturbations[k]
            diag = self._solve_shifted(self.problem.load + tau * z, tol)
            plain = self._solve_shifted(self.problem.load + tau * direction, tol)
            distance = float(np.max(metric.node_dual_norms(self._on_grid(z) - d_values)))
            return (
                self._quotient_error(base, du, diag, tau, rho),
                self._quotient_error(base, du, plain, tau, rho),
                distance,
            )

        rows = parallel_map(member, range(len(taus)), threads=self.options.threads, progress=self.options.progress, desc='hadamard')
        errors = [r[0] for r in rows]
        fd_errors = [r[1] for r in rows]
        distances = [r[2] for r in rows]
        scale = self.problem.grid.t_end ** (1.0 / rho) * self.constants.K
        floor = 10.0 * tol
        bounds = [fd + scale * dist for fd, dist in zip(fd_errors, distances)]
        within = [e <= b + floor for e, b in zip(errors, bounds)]
        converged = errors[-1] <= 2.0 * fd_errors[-1] + scale * distances[-1] + floor
        return {
            'taus': taus,
            'errors': errors,
            'fd_errors': fd_errors,
            'distances': distances,
            'bounds': bounds,
            'within_bound': within,
            'converged': converged,
            'passes': converged and all(within),
            'floor': floor,
        }

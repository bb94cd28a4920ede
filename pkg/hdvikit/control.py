"""
Optimal control of the load: control-to-load maps, the tracking plus H^1(0,T;Z)
cost and a projected descent method driven by directional derivatives.
"""
# Imports: Standard Library
import logging
from typing import Dict, List, Optional, Sequence

# Imports: Third Party
import numpy as np
from tqdm import tqdm

# Imports: Local
from .algebra import SPDFactor, TimeGrid, quadrature_weights
from .errors import DimensionMismatch, LineSearchFailed, NotSPD, ValidationError
from .hdvi import HistorySolver, Trajectory
from .logs import log_method_call
from .model import HdviProblem, LoadHistory
from .options import SolverOptions
from .parallel import parallel_map
from .sensitivity import SensitivitySolver

BODY_AND_TRACTION = 'body_and_traction'
TRACTION_ONLY = 'traction_only'
CHANNEL_KINDS = ('body', 'traction')


def _is_integer(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


class ControlMap:
    """
    Linear map from control samples to assembled loads.

    Each channel puts ``weight * g_j(t)`` on one DOF: a lumped mass for body-force
    channels, a boundary weight for traction channels. The same weights define
    the discrete Z norm.

    Args:
        n_dof (int): Dimension of the discrete space.
        channels (sequence): Dicts with 'dof', 'weight' and 'kind' ('body' or 'traction').
        kind (str, optional): 'body_and_traction' or 'traction_only'.
        fixed_load (LoadHistory, optional): f_0, required for 'traction_only'.
    """
    def __init__(self, n_dof: int, channels: Sequence[dict], kind: str = BODY_AND_TRACTION, fixed_load: Optional[LoadHistory] = None):
        if kind not in (BODY_AND_TRACTION, TRACTION_ONLY):
            raise ValidationError(f"unknown map kind '{kind}'", field="control.map")
        if not channels:
            raise ValidationError("at least one control channel is needed", field="control.channels")
        assembly = np.zeros((n_dof, len(channels)))
        weights = np.zeros(len(channels))
        kinds = []
        for j, channel in enumerate(channels):
            if not isinstance(channel, dict) or not _is_integer(channel.get('dof')):
                raise ValidationError(f"channel {j} needs an integer 'dof'", field=f"control.channels[{j}].dof")
            weight = channel.get('weight', 1.0)
            if isinstance(weight, bool) or not isinstance(weight, (int, float)):
                raise ValidationError(f"channel {j} weight must be a number", field=f"control.channels[{j}].weight")
            dof, weight, channel_kind = int(channel['dof']), float(weight), channel.get('kind', 'traction')
            if not 0 <= dof < n_dof:
                raise ValidationError(f"channel {j} DOF {dof} outside 0..{n_dof - 1}", field="control.channels")
            if not weight > 0:
                raise ValidationError(f"channel {j} weight must be positive", field="control.channels")
            if channel_kind not in CHANNEL_KINDS:
                raise ValidationError(f"channel {j} kind must be one of {CHANNEL_KINDS}", field="control.channels")
            assembly[dof, j] = weight
            weights[j] = weight
            kinds.append(channel_kind)
        if kind == TRACTION_ONLY:
            if fixed_load is None:
                raise ValidationError("traction_only needs a fixed body-force load", field="control.fixed_load")
            if any(k != 'traction' for k in kinds):
                raise ValidationError("traction_only accepts traction channels only", field="control.channels")
        if fixed_load is not None and fixed_load.n_dof != n_dof:
            raise DimensionMismatch(f"fixed load has {fixed_load.n_dof} DOFs, space has {n_dof}")

        self.n_dof = n_dof
        self.kind = kind
        self.kinds = tuple(kinds)
        self.assembly = assembly
        self.z_weights = weights
        self.fixed_load = fixed_load

    @property
    def n_channels(self) -> int:
        return self.assembly.shape[1]

    def assemble(self, samples: np.ndarray) -> np.ndarray:
        """Linear part: assembled loads of control samples, shape (nodes, n_dof)."""
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != self.n_channels:
            raise DimensionMismatch(f"control samples must have {self.n_channels} channels, got shape {samples.shape}")
        return samples @ self.assembly.T

    def control_to_load(self, g: 'Control') -> LoadHistory:
        """
        Assembled load f(t) = f_0(t) + sum_j weight_j g_j(t) e_{dof_j} on the control grid.

        Args:
            g (Control): Control on the problem grid.
        Returns:
            LoadHistory: The load, linear between grid nodes.
        Raises:
            DimensionMismatch: If the control has the wrong number of channels.
        """
        values = self.assemble(g.samples)
        if self.fixed_load is not None:
            values = values + self.fixed_load.on_grid(g.grid)
        return LoadHistory.on_nodes(g.grid, values)


class Control:
    """
    Control samples on the grid nodes with an optional per-channel box.

    Args:
        grid (TimeGrid): The time grid.
        samples (array-like): Shape (M+1, n_channels).
        lower, upper (array-like, optional): Per-channel bounds.
    """
    def __init__(self, grid: TimeGrid, samples, lower=None, upper=None):
        samples = np.array(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.shape[0] != grid.steps + 1:
            raise DimensionMismatch(f"control needs {grid.steps + 1} samples, got {samples.shape[0]}")
        n_ch = samples.shape[1]
        self.grid = grid
        self.lower = np.full(n_ch, -np.inf) if lower is None else np.broadcast_to(np.asarray(lower, dtype=float), (n_ch,)).copy()
        self.upper = np.full(n_ch, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, dtype=float), (n_ch,)).copy()
        if np.any(self.lower > self.upper):
            raise ValidationError("lower bounds exceed upper bounds", field="control.bounds")
        if np.any(samples < self.lower - 1e-12) or np.any(samples > self.upper + 1e-12):
            raise ValidationError("control violates its bounds", field="control.initial")
        samples.setflags(write=False)
        self.samples = samples

    @classmethod
    def constant(cls, grid: TimeGrid, values, lower=None, upper=None) -> 'Control':
        values = np.atleast_1d(np.asarray(values, dtype=float))
        return cls(grid, np.tile(values, (grid.steps + 1, 1)), lower, upper)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    def project(self, samples) -> np.ndarray:
        return np.clip(samples, self.lower, self.upper)

    def with_samples(self, samples) -> 'Control':
        return Control(self.grid, self.project(samples), self.lower, self.upper)


class CostReport:
    """
    Cost of one control.

    Attributes:
        tracking (float): alpha ||u(T) - u_d||_V^2.
        regularization (float): beta ||g||_{H^1(0,T;Z)}^2.
        total (float): Their sum.
        step (float): Accepted step length that produced this control (None for the start).
    """
    def __init__(self, tracking: float, regularization: float, step: Optional[float] = None):
        self.tracking = float(tracking)
        self.regularization = float(regularization)
        self.total = self.tracking + self.regularization
        self.step = step

    def to_dict(self) -> dict:
        return {'tracking': self.tracking, 'regularization': self.regularization, 'total': self.total, 'step': self.step}

    def __repr__(self):
        return f"CostReport(tracking={self.tracking:.6e}, regularization={self.regularization:.6e}, total={self.total:.6e})"


class MinimizeResult:
    """Outcome of ``ControlProblem.minimize``: best control, history and stopping flag."""
    def __init__(self, control: Control, history: List[CostReport], iterations: int, status: str, probe_min: float):
        self.control = control
        self.history = history
        self.iterations = iterations
        self.status = status
        self.probe_min = probe_min

    @property
    def converged(self) -> bool:
        return self.status == 'converged'

    @property
    def max_iterations_reached(self) -> bool:
        return self.status == 'max_iterations'


class ControlProblem:
    """
    Minimizes alpha ||u(T) - u_d||_V^2 + beta ||g||_{H^1(0,T;Z)}^2 over the control box.

    Args:
        problem (HdviProblem): Problem whose load is replaced by the control load.
        control_map (ControlMap): Control-to-load map.
        alpha (float): Tracking weight >= 0.
        beta (float): Regularization weight > 0.
        target (array-like): u_d.
        options (SolverOptions, optional): Numeric settings.
        logger (logging.Logger, optional): Logger for method calls.
    """
    def __init__(self, problem: HdviProblem, control_map: ControlMap, alpha: float, beta: float, target, options: Optional[SolverOptions] = None, logger: Optional[logging.Logger] = None):
        if not alpha >= 0:
            raise ValidationError(f"alpha must be nonnegative, got {alpha}", field="control.alpha")
        if not beta > 0:
            raise ValidationError(f"beta must be positive, got {beta}", field="control.beta")
        target = np.asarray(target, dtype=float)
        if target.shape != (problem.n_dof,):
            raise DimensionMismatch(f"target has shape {target.shape}, expected ({problem.n_dof},)")
        if control_map.n_dof != problem.n_dof:
            raise DimensionMismatch("control map and problem disagree on n_dof")

        self.problem = problem
        self.control_map = control_map
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.target = target
        self.options = options or SolverOptions()
        self.logger = logger
        self.sensitivity = SensitivitySolver(problem, self.options)
        self.history_solver = self.sensitivity.history
        self.gram = self._gram_matrix()
        self._metric = problem.space.v_metric

    def _gram_matrix(self) -> np.ndarray:
        """Gram matrix of the discrete H^1(0,T;Z) norm on row-major flattened samples."""
        grid = self.problem.grid
        M, dt = grid.steps, grid.dt
        time = np.diag(quadrature_weights(dt, M, 'trapezoid'))
        for n in range(M):
            time[n, n] += 1.0 / dt
            time[n + 1, n + 1] += 1.0 / dt
            time[n, n + 1] -= 1.0 / dt
            time[n + 1, n] -= 1.0 / dt
        return np.kron(time, np.diag(self.control_map.z_weights))

    def regularization(self, g: Control) -> float:
        flat = g.samples.reshape(-1)
        return self.beta * float(flat @ self.gram @ flat)

    def state(self, g: Control, tol: Optional[float] = None) -> Trajectory:
        """u = S(K(g))."""
        loads = self.control_map.control_to_load(g).on_grid(self.problem.grid)
        return self.history_solver.solve_forward(tol, loads=loads)

    def _report(self, g: Control, u: Trajectory, step: Optional[float] = None) -> CostReport:
        r = u.values[-1] - self.target
        return CostReport(self.alpha * float(r @ self._metric @ r), self.regularization(g), step)

    @log_method_call
    def evaluate_cost(self, g: Control, tol: Optional[float] = None) -> CostReport:
        """
        Evaluates tracking, regularization and total cost of a control.

        Args:
            g (Control): Control on the problem grid.
            tol (float, optional): Forward solver tolerance.
        Returns:
            CostReport: The three cost values.
        """
        return self._report(g, self.state(g, tol))

    def _derivative_end(self, base: Trajectory, direction: np.ndarray, tol: float) -> np.ndarray:
        """delta u(T) for a control direction (samples)."""
        d_load = self.control_map.assemble(direction)
        return self.sensitivity.solve_derivative(base, d_load, tol).values[-1]

    def directional_derivative(self, g: Control, base: Trajectory, direction: np.ndarray, tol: Optional[float] = None) -> float:
        """L'(g; direction) with the tracking term linearized through the derivative solver."""
        tol = self.options.tol if tol is None else tol
        r = base.values[-1] - self.target
        du_T = self._derivative_end(base, direction, tol)
        flat_g, flat_d = g.samples.reshape(-1), np.asarray(direction).reshape(-1)
        return 2.0 * self.alpha * float(r @ self._metric @ du_T) + 2.0 * self.beta * float(flat_g @ self.gram @ flat_d)

    def probe(self, g: Control, base: Trajectory, tol: Optional[float] = None) -> Dict[str, np.ndarray]:
        """
        Directional derivatives along +-e_i for every control coordinate.

        Infeasible probe directions (at a bound) get +inf.

        Returns:
            dict: 'plus', 'minus' (derivatives) and 'jacobian' (columns delta u(T) along +e_i).
        """
        tol = self.options.tol if tol is None else tol
        shape = g.samples.shape
        size = int(np.prod(shape))
        linear = self.sensitivity.base_cones(base)
        linear = all(c.is_linear for c in linear['cones']) and not linear['kink_nodes']

        def unit(i, sign):
            e = np.zeros(size)
            e[i] = sign
            return e.reshape(shape)

        plus_cols = parallel_map(lambda i: self._derivative_end(base, unit(i, 1.0), tol), range(size), threads=self.options.threads)
        if linear:
            minus_cols = [-col for col in plus_cols]
        else:
            minus_cols = parallel_map(lambda i: self._derivative_end(base, unit(i, -1.0), tol), range(size), threads=self.options.threads)

        jacobian = np.column_stack(plus_cols)
        minus_jac = np.column_stack(minus_cols)
        r = base.values[-1] - self.target
        track = 2.0 * self.alpha * (r @ self._metric)
        reg = 2.0 * self.beta * (self.gram @ g.samples.reshape(-1))
        plus = track @ jacobian + reg
        minus = track @ minus_jac - reg

        flat = g.samples.reshape(-1)
        upper = np.tile(g.upper, shape[0])
        lower = np.tile(g.lower, shape[0])
        plus = np.where(flat < upper, plus, np.inf)
        minus = np.where(flat > lower, minus, np.inf)
        return {'plus': plus, 'minus': minus, 'jacobian': jacobian}

    @staticmethod
    def pseudo_gradient(plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
        """Component i is the most negative one-sided slope, signed as a gradient; 0 when neither side descends."""
        grad = np.zeros_like(plus)
        go_up = (plus < 0) & (plus <= minus)
        go_down = (minus < 0) & ~go_up
        grad[go_up] = plus[go_up]
        grad[go_down] = -minus[go_down]
        return grad

    def _blocked(self, g: Control, s: np.ndarray) -> np.ndarray:
        """Zeroes the components of s that leave the box at an active bound."""
        flat = g.samples.reshape(-1)
        upper = np.tile(g.upper, g.samples.shape[0])
        lower = np.tile(g.lower, g.samples.shape[0])
        s = s.copy()
        s[(flat >= upper) & (s > 0)] = 0.0
        s[(flat <= lower) & (s < 0)] = 0.0
        return s

    def _direction(self, g: Control, base: Trajectory, probes: Dict[str, np.ndarray], tol: float):
        """Gauss-Newton model step, falling back to the Riesz-preconditioned pseudo-gradient."""
        J = probes['jacobian']
        r = base.values[-1] - self.target
        flat = g.samples.reshape(-1)
        hessian = 2.0 * self.alpha * (J.T @ self._metric @ J) + 2.0 * self.beta * self.gram
        rhs = -(2.0 * self.alpha * (J.T @ (self._metric @ r)) + 2.0 * self.beta * (self.gram @ flat))
        candidates = []
        try:
            candidates.append(SPDFactor(0.5 * (hessian + hessian.T)).solve(rhs))
        except NotSPD:
            pass
        grad = self.pseudo_gradient(probes['plus'], probes['minus'])
        candidates.append(-SPDFactor(2.0 * self.beta * self.gram).solve(grad))

        for s in candidates:
            s = self._blocked(g, s)
            if not np.any(s):
                continue
            slope = self.directional_derivative(g, base, s.reshape(g.samples.shape), tol)
            if slope < 0:
                return s, slope
        return None, 0.0

    @log_method_call
    def minimize(self, g0: Control, tol: Optional[float] = None, max_iters: int = 50) -> MinimizeResult:
        """
        Projected descent with Armijo backtracking.

        Stops when every feasible probe derivative is >= -tol. Reaching
        ``max_iters`` returns the best control with status 'max_iterations'.

        Args:
            g0 (Control): Feasible starting control.
            tol (float, optional): Stationarity tolerance.
            max_iters (int, optional): Iteration cap. Defaults to 50.
        Returns:
            MinimizeResult: Best control, cost history (nonincreasing) and status.
        Raises:
            LineSearchFailed: If no step is accepted after options.max_halvings halvings.
        """
        tol = self.options.tol if tol is None else tol
        solve_tol = min(tol, self.options.tol)
        g = g0.with_samples(g0.samples)
        u = self.state(g, solve_tol)
        current = self._report(g, u)
        history = [current]
        status, probe_min, iteration = 'max_iterations', -np.inf, 0

        for iteration in tqdm(range(1, max_iters + 1), desc='minimize', disable=not self.options.progress):
            probes = self.probe(g, u, solve_tol)
            probe_min = float(np.min(np.concatenate([probes['plus'], probes['minus']])))
            if probe_min >= -tol:
                status = 'converged'
                break
            s, slope = self._direction(g, u, probes, solve_tol)
            if s is None or slope >= -tol:
                status = 'stationary'
                break

            step = 1.0
            for _ in range(self.options.max_halvings + 1):
                trial = g.with_samples(g.samples + step * s.reshape(g.samples.shape))
                u_trial = self.state(trial, solve_tol)
                report = self._report(trial, u_trial, step)
                if report.total < current.total and report.total <= current.total + self.options.armijo_fraction * step * slope:
                    break
                step *= 0.5
            else:
                raise LineSearchFailed(
                    f"no Armijo step after {self.options.max_halvings} halvings at iteration {iteration}",
                    result=MinimizeResult(g, history, iteration, 'line_search_failed', probe_min),
                )
            g, u, current = trial, u_trial, report
            history.append(current)
            if self.logger:
                self.logger.info(f"Iteration {iteration}: total {current.total:.6e}, step {step:.3e}")
        else:
            iteration = max_iters

        return MinimizeResult(g, history, iteration, status, probe_min)

    def target_from_control(self, g: Control, tol: Optional[float] = None) -> np.ndarray:
        """u(T) for a given control, used to build recoverable targets."""
        return self.state(g, tol).values[-1].copy()

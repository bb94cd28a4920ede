"""
Problem definition: discrete spaces, constraint sets, compliance laws,
relaxation kernels, load histories and the constants derived from them.
"""
# Imports: Standard Library
import copy
import math
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

# Imports: Third Party
import numpy as np
import scipy.linalg

# Imports: Local
from .algebra import TimeGrid, SPDFactor, VolterraMemory, induced_norm
from .errors import DimensionMismatch, NotSPD, ValidationError


def _frozen(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


class DiscreteSpace:
    """
    Galerkin space: strain map D, quadrature weights q and the V metric G = D^T diag(q) D.

    Args:
        strain_map (array-like): D, shape (strain components x quadrature points, n_dof).
        q_weights (array-like): Strictly positive quadrature weights, one per strain row.
        coordinates (array-like, optional): Nodal coordinates of the DOFs (1D meshes only).
    """
    def __init__(self, strain_map, q_weights, coordinates=None):
        D = np.atleast_2d(np.asarray(strain_map, dtype=float))
        q = np.atleast_1d(np.asarray(q_weights, dtype=float))
        if q.ndim != 1 or q.shape[0] != D.shape[0]:
            raise DimensionMismatch(f"strain map has {D.shape[0]} rows but {q.shape[0]} quadrature weights were given")
        if not np.all(np.isfinite(D)):
            raise ValidationError("entries must be finite", field="problem.strain_map")
        if not np.all(q > 0):
            raise ValidationError("quadrature weights must be strictly positive", field="problem.q_weights")

        self.strain_map = _frozen(D)
        self.q_weights = _frozen(q)
        self.sqrt_q = _frozen(np.sqrt(q))
        self.n_dof = D.shape[1]
        self.strain_dim = D.shape[0]
        self.eps_adjoint = _frozen(D.T * q[None, :])
        self.v_metric = _frozen(self.eps_adjoint @ D)
        try:
            self.metric = SPDFactor(self.v_metric)
        except NotSPD as e:
            raise ValidationError(f"V metric D^T diag(q) D is not positive definite ({e.message}); fix more DOFs", field="problem.strain_map")
        self.coordinates = None if coordinates is None else _frozen(coordinates)

    def strains(self, values: np.ndarray) -> np.ndarray:
        """Strain vectors of one (n_dof,) or several (nodes, n_dof) displacement vectors."""
        return np.asarray(values, dtype=float) @ self.strain_map.T

    def v_norm(self, x) -> float:
        return self.metric.norm(x)

    def dual_norm(self, y) -> float:
        return self.metric.dual_norm(y)


class ConstraintSet:
    """
    Box-type admissible set U = {v : v_i <= g_i on the bounded DOFs}.

    Args:
        n_dof (int): Dimension of the discrete space.
        bounded_dofs (iterable): Pairs (dof index, upper bound g_i).
    """
    def __init__(self, n_dof: int, bounded_dofs: Iterable[Tuple[int, float]] = ()):
        pairs = [(int(i), float(g)) for i, g in bounded_dofs]
        indices = [i for i, _ in pairs]
        if len(set(indices)) != len(indices):
            raise ValidationError(f"duplicate constrained DOF in {indices}", field="problem.constraints")
        for i, g in pairs:
            if not 0 <= i < n_dof:
                raise ValidationError(f"DOF index {i} outside 0..{n_dof - 1}", field="problem.constraints")
            if not np.isfinite(g):
                raise ValidationError(f"bound of DOF {i} must be finite", field="problem.constraints")

        self.n_dof = n_dof
        self.bounded_dofs = tuple(sorted(pairs))
        self.indices = np.array([i for i, _ in self.bounded_dofs], dtype=int)
        self.bounds = _frozen([g for _, g in self.bounded_dofs])
        upper = np.full(n_dof, np.inf)
        upper[self.indices] = self.bounds
        self.upper = _frozen(upper)
        self.zero_feasible = bool(np.all(self.bounds >= 0))

    def project(self, v) -> np.ndarray:
        """Componentwise clamp onto U (the Euclidean projection for a box)."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n_dof:
            raise DimensionMismatch(f"vector has {v.shape[-1]} entries, space has {self.n_dof}")
        return np.minimum(v, self.upper)

    def activity_tolerance(self, act_tol: float) -> np.ndarray:
        """Per bounded DOF activity threshold act_tol*(1+|g_i|)."""
        return act_tol * (1.0 + np.abs(self.bounds))

    def violation(self, v) -> float:
        """Largest amount by which v exceeds a bound (0 when feasible)."""
        if not len(self.indices):
            return 0.0
        v = np.atleast_2d(np.asarray(v, dtype=float))
        return float(max(np.max(v[:, self.indices] - self.bounds), 0.0))


def project(U: ConstraintSet, v) -> np.ndarray:
    """Projects v onto the admissible set U."""
    return U.project(v)


class ComplianceLaw:
    """
    Normal compliance P(v)_i = w_i p_i(v_i) on the contact DOFs, with the
    law p_i(r) = c_i r_+.

    Only this piecewise linear law is supported. The coefficient c_i may differ
    per contact DOF; the Lipschitz constant is max_i c_i. Other compliance
    functions need a subclass overriding pressure, directional and kinks.

    Args:
        n_dof (int): Dimension of the discrete space.
        dofs (sequence): Contact DOF indices.
        stiffness (sequence): c_i >= 0 per contact DOF.
        boundary_weights (sequence, optional): Surface measure lumps w_i > 0. Defaults to 1.
    """
    def __init__(self, n_dof: int, dofs: Sequence[int] = (), stiffness: Sequence[float] = (), boundary_weights: Optional[Sequence[float]] = None):
        dofs = np.asarray(dofs, dtype=int).reshape(-1)
        stiffness = np.asarray(stiffness, dtype=float).reshape(-1)
        weights = np.ones(len(dofs)) if boundary_weights is None else np.asarray(boundary_weights, dtype=float).reshape(-1)
        if not (len(dofs) == len(stiffness) == len(weights)):
            raise DimensionMismatch(f"compliance needs one stiffness and weight per DOF, got {len(dofs)}/{len(stiffness)}/{len(weights)}")
        if len(set(dofs.tolist())) != len(dofs) or np.any(dofs < 0) or np.any(dofs >= n_dof):
            raise ValidationError(f"contact DOFs must be distinct indices in 0..{n_dof - 1}", field="problem.compliance.dofs")
        if np.any(~np.isfinite(stiffness)) or np.any(stiffness < 0):
            raise ValidationError("stiffness must be finite and nonnegative", field="problem.compliance.stiffness")
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            raise ValidationError("boundary weights must be positive", field="problem.compliance.boundary_weights")

        self.n_dof = n_dof
        self.dofs = dofs
        self.stiffness = _frozen(stiffness)
        self.boundary_weights = _frozen(weights)
        self.lipschitz = float(np.max(stiffness)) if len(stiffness) else 0.0
        self.max_weight = float(np.max(weights)) if len(weights) else 0.0
        self.is_zero = self.lipschitz == 0.0

    @classmethod
    def none(cls, n_dof: int) -> 'ComplianceLaw':
        return cls(n_dof)

    def pressure(self, r) -> np.ndarray:
        """p_i(r_i) = c_i max(r_i, 0) for each contact DOF."""
        return self.stiffness * np.maximum(np.asarray(r, dtype=float), 0.0)

    def apply(self, z) -> np.ndarray:
        """Assembled compliance vector P(z)."""
        out = np.zeros(self.n_dof)
        if not self.is_zero:
            out[self.dofs] = self.boundary_weights * self.pressure(np.asarray(z)[self.dofs])
        return out

    def directional(self, z, d, kink_tol: float = 0.0) -> np.ndarray:
        """
        Directional derivative P'(z; d): c d where r > 0, c max(d, 0) at the kink, 0 where r < 0.
        Values with |r| <= kink_tol count as the kink.
        """
        out = np.zeros(self.n_dof)
        if self.is_zero:
            return out
        r = np.asarray(z)[self.dofs]
        dd = np.asarray(d)[self.dofs]
        slope = np.where(r > kink_tol, dd, np.where(r >= -kink_tol, np.maximum(dd, 0.0), 0.0))
        out[self.dofs] = self.boundary_weights * self.stiffness * slope
        return out

    def kinks(self, z, kink_tol: float) -> np.ndarray:
        """Contact DOFs sitting on the kink of their law."""
        if self.is_zero:
            return np.zeros(0, dtype=int)
        r = np.asarray(z)[self.dofs]
        return self.dofs[(np.abs(r) <= kink_tol) & (self.stiffness > 0)]


class RelaxationKernel:
    """
    Relaxation kernel R(t) acting on strain vectors, sampled on a time grid.

    The norm used by every constant is the largest Q-induced operator norm over
    the grid samples, multiplied by a safety factor. When a continuity modulus
    is declared, adjacent samples are checked against it.

    Args:
        evaluator (callable): t -> (s x s) matrix.
        strain_dim (int): s.
        grid (TimeGrid): Time grid to sample on.
        q_weights (array-like): Quadrature weights defining the Q metric.
        safety_factor (float, optional): Multiplier >= 1 on the sampled norm.
        modulus (float, optional): Declared Lipschitz modulus in time.
        name (str, optional): Label used in reports.
    """
    def __init__(self, evaluator: Callable[[float], np.ndarray], strain_dim: int, grid: TimeGrid, q_weights, safety_factor: float = 1.0, modulus: Optional[float] = None, name: str = 'custom'):
        self.evaluator = evaluator
        self.strain_dim = int(strain_dim)
        self.grid = grid
        self.name = name
        sqrt_q = np.sqrt(np.asarray(q_weights, dtype=float))
        if sqrt_q.shape != (self.strain_dim,):
            raise DimensionMismatch(f"kernel acts on {self.strain_dim} strain components but {sqrt_q.shape[0]} weights were given")

        lags = np.empty((grid.steps + 1, self.strain_dim, self.strain_dim))
        for j, t in enumerate(grid.nodes):
            sample = np.asarray(evaluator(t), dtype=float)
            if sample.ndim == 0:
                sample = sample * np.eye(self.strain_dim)
            if sample.shape != (self.strain_dim, self.strain_dim):
                raise ValidationError(f"kernel sample at t={t} has shape {sample.shape}, expected square {self.strain_dim}x{self.strain_dim}", field="problem.kernel")
            if not np.all(np.isfinite(sample)):
                raise ValidationError(f"kernel sample at t={t} is not finite", field="problem.kernel")
            lags[j] = sample
        lags.setflags(write=False)
        self.lags = lags

        norms = np.array([induced_norm(sample, sqrt_q) for sample in lags])
        self.sample_norms = _frozen(norms)
        self.safety_factor = float(safety_factor)
        self.sup_norm = float(np.max(norms)) * self.safety_factor
        self.norm_at_zero = float(norms[0]) * self.safety_factor
        self.is_zero = not np.any(lags)

        self.modulus = modulus
        if modulus is not None and grid.steps >= 1:
            jumps = np.linalg.norm(np.diff(lags, axis=0), ord=2, axis=(1, 2))
            worst = float(np.max(jumps))
            if worst > modulus * grid.dt * (1 + 1e-12) + 1e-15:
                raise ValidationError(f"adjacent samples differ by {worst:.3e}, more than the declared modulus allows ({modulus * grid.dt:.3e})", field="problem.kernel.modulus")

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.evaluator(t), dtype=float)

    @classmethod
    def constant(cls, matrix, grid: TimeGrid, q_weights, **kwargs) -> 'RelaxationKernel':
        matrix = _square(matrix, "problem.kernel.matrix")
        return cls(lambda t: matrix, matrix.shape[0], grid, q_weights, name='constant', **kwargs)

    @classmethod
    def exponential(cls, matrix, rate: float, grid: TimeGrid, q_weights, **kwargs) -> 'RelaxationKernel':
        """R(t) = matrix * exp(-rate t)."""
        matrix = _square(matrix, "problem.kernel.matrix")
        if not np.isfinite(rate):
            raise ValidationError("rate must be finite", field="problem.kernel.rate_per_second")
        return cls(lambda t: matrix * math.exp(-rate * t), matrix.shape[0], grid, q_weights, name='exponential', **kwargs)

    @classmethod
    def table(cls, times, matrices, grid: TimeGrid, q_weights, **kwargs) -> 'RelaxationKernel':
        """Piecewise linear interpolation of tabulated samples, constant beyond the table ends."""
        times = np.asarray(times, dtype=float)
        mats = [_square(m, f"problem.kernel.matrices[{k}]") for k, m in enumerate(matrices)]
        if times.ndim != 1 or len(times) != len(mats) or len(mats) == 0:
            raise ValidationError(f"need one matrix per time, got {len(mats)} matrices for {times.size} times", field="problem.kernel.matrices")
        if len({m.shape for m in mats}) != 1:
            raise ValidationError("all matrices must have the same shape", field="problem.kernel.matrices")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing", field="problem.kernel.times_seconds")
        stack = np.stack(mats)

        def evaluator(t):
            if t <= times[0]:
                return stack[0]
            if t >= times[-1]:
                return stack[-1]
            k = int(np.searchsorted(times, t, side='right')) - 1
            theta = (t - times[k]) / (times[k + 1] - times[k])
            return (1.0 - theta) * stack[k] + theta * stack[k + 1]

        return cls(evaluator, stack.shape[1], grid, q_weights, name='table', **kwargs)

    @classmethod
    def zero(cls, strain_dim: int, grid: TimeGrid, q_weights, **kwargs) -> 'RelaxationKernel':
        zero = np.zeros((strain_dim, strain_dim))
        return cls(lambda t: zero, strain_dim, grid, q_weights, name='zero', **kwargs)


def _square(matrix, field: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}", field=field)
    if not np.all(np.isfinite(m)):
        raise ValidationError("entries must be finite", field=field)
    return m


class LoadHistory:
    """
    Assembled dual-vector load f(t), linear between tabulated times.

    Args:
        times (array-like): Strictly increasing times.
        values (array-like): Load vectors at those times, shape (len(times), n_dof).
    """
    def __init__(self, times, values):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.shape[0] != times.shape[0]:
            raise DimensionMismatch(f"load table has {times.shape[0]} times but values of shape {values.shape}")
        if times.shape[0] > 1 and np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing", field="load.times_seconds")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValidationError("load entries must be finite", field="load.values")
        self.times = _frozen(times)
        self.values = _frozen(values)
        self.n_dof = values.shape[1]

    @classmethod
    def constant(cls, vector, t_end: float) -> 'LoadHistory':
        vector = np.asarray(vector, dtype=float)
        return cls([0.0, t_end], np.vstack([vector, vector]))

    @classmethod
    def from_function(cls, fn: Callable[[float], np.ndarray], grid: TimeGrid) -> 'LoadHistory':
        return cls(grid.nodes, np.array([np.asarray(fn(t), dtype=float) for t in grid.nodes]))

    @classmethod
    def on_nodes(cls, grid: TimeGrid, values) -> 'LoadHistory':
        return cls(grid.nodes, values)

    def __call__(self, t: float) -> np.ndarray:
        if self.times.shape[0] == 1:
            return self.values[0].copy()
        return np.array([np.interp(t, self.times, self.values[:, i]) for i in range(self.n_dof)])

    def sample(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self.times.shape[0] == 1:
            return np.tile(self.values[0], (times.shape[0], 1))
        return np.column_stack([np.interp(times, self.times, self.values[:, i]) for i in range(self.n_dof)])

    def on_grid(self, grid: TimeGrid) -> np.ndarray:
        return self.sample(grid.nodes)

    def _combine(self, other: 'LoadHistory', a: float, b: float) -> 'LoadHistory':
        if other.n_dof != self.n_dof:
            raise DimensionMismatch(f"cannot combine loads with {self.n_dof} and {other.n_dof} DOFs")
        times = np.union1d(self.times, other.times)
        return LoadHistory(times, a * self.sample(times) + b * other.sample(times))

    def __add__(self, other: 'LoadHistory') -> 'LoadHistory':
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other: 'LoadHistory') -> 'LoadHistory':
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scale: float) -> 'LoadHistory':
        return LoadHistory(self.times, float(scale) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> 'LoadHistory':
        return self * -1.0


class HdviProblem:
    """
    A complete discrete history-dependent variational inequality.

    Args:
        space (DiscreteSpace): Discrete V.
        B (array-like): Viscoelastic stiffness acting on strain vectors (s x s).
        kernel (RelaxationKernel): Relaxation kernel on the same grid.
        compliance (ComplianceLaw): Normal compliance.
        constraints (ConstraintSet): Admissible set.
        load (LoadHistory): Assembled load.
        grid (TimeGrid): Time grid.
        name (str, optional): Label used in logs and reports.
    """
    def __init__(self, space: DiscreteSpace, B, kernel: RelaxationKernel, compliance: ComplianceLaw, constraints: ConstraintSet, load: LoadHistory, grid: TimeGrid, name: str = 'problem'):
        s, n = space.strain_dim, space.n_dof
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if B.shape != (s, s):
            raise DimensionMismatch(f"stiffness must be {s}x{s}, got {B.shape}")
        if kernel.strain_dim != s:
            raise DimensionMismatch(f"kernel acts on {kernel.strain_dim} strain components, space has {s}")
        if kernel.grid != grid:
            raise ValidationError("kernel was sampled on a different time grid", field="problem.kernel")
        if compliance.n_dof != n or constraints.n_dof != n or load.n_dof != n:
            raise DimensionMismatch(f"compliance/constraints/load sizes ({compliance.n_dof}, {constraints.n_dof}, {load.n_dof}) do not match n_dof={n}")

        self.name = name
        self.space = space
        self.B = _frozen(B)
        self.kernel = kernel
        self.compliance = compliance
        self.constraints = constraints
        self.grid = grid
        self.W = _frozen(space.eps_adjoint @ B @ space.strain_map)
        sym_w = 0.5 * (self.W + self.W.T)
        self.m_B = float(scipy.linalg.eigh(sym_w, space.v_metric, eigvals_only=True)[0])
        if not self.m_B > 0:
            raise ValidationError(f"stiffness is not coercive in the V metric (m_B = {self.m_B:.3e})", field="problem.stiffness")
        self._set_load(load)

    def _set_load(self, load: LoadHistory):
        loads = load.on_grid(self.grid)
        if not np.all(np.isfinite(loads)):
            raise ValidationError("load is not finite on the grid", field="problem.load")
        loads.setflags(write=False)
        self.load = load
        self.loads = loads

    @property
    def n_dof(self) -> int:
        return self.space.n_dof

    def with_load(self, load: LoadHistory) -> 'HdviProblem':
        """Same problem with another load; operators and constants are shared."""
        other = copy.copy(self)
        other._set_load(load)
        return other

    def memory(self, rule: str) -> VolterraMemory:
        return VolterraMemory(self.kernel.lags, self.grid, rule)

    def step_contraction(self, rule: str = 'trapezoid') -> float:
        """Contraction factor (dt/2)||R(0)||/m_B of the trapezoid self-term loop (0 for left_rectangle)."""
        if rule != 'trapezoid':
            return 0.0
        return 0.5 * self.grid.dt * self.kernel.norm_at_zero / self.m_B


class DerivedConstants:
    """
    Constants driving every Lipschitz and contraction estimate.

    Attributes:
        c (float): kernel.sup_norm / m_B.
        K (float): Lipschitz constant of the solution operator, e^{cT}/m_B.
        T_star (float): Window length m_B / (2 sup_norm), inf for a zero kernel.
        unbounded (bool): True when T_star is infinite.
        step_contraction (float): Trapezoid self-term contraction factor.
        concatenation_windows (int): Windows of length T_star covering [0, T].
        picard_power (int): Smallest p with L_p = (cT)^p/p! < 1.
        picard_constants (list): L_0, ..., L_p.
        q_bound_factor (float): (L_0 + ... + L_{p-1}) / (1 - L_p).
    """
    def __init__(self, m_B: float, kernel_norm: float, t_end: float, step_contraction: float = 0.0):
        self.m_B = float(m_B)
        self.kernel_norm = float(kernel_norm)
        self.t_end = float(t_end)
        self.c = self.kernel_norm / self.m_B
        self.K = math.exp(self.c * self.t_end) / self.m_B
        self.unbounded = self.kernel_norm == 0.0
        self.T_star = math.inf if self.unbounded else self.m_B / (2.0 * self.kernel_norm)
        self.concatenation_windows = 1 if self.unbounded else int(math.floor(self.t_end / self.T_star)) + 1
        self.step_contraction = float(step_contraction)

        x = self.c * self.t_end
        constants = [1.0]
        p = 1
        while True:
            L_p = 0.0 if x == 0.0 else math.exp(p * math.log(x) - math.lgamma(p + 1))
            constants.append(L_p)
            if L_p < 1.0:
                break
            p += 1
        self.picard_power = p
        self.picard_constants = constants
        self.q_bound_factor = sum(constants[:p]) / (1.0 - constants[p])

    def to_dict(self) -> dict:
        return {
            'm_B': self.m_B,
            'kernel_norm': self.kernel_norm,
            't_end': self.t_end,
            'c': self.c,
            'K': self.K,
            'T_star': 'inf' if self.unbounded else self.T_star,
            'unbounded': self.unbounded,
            'concatenation_windows': self.concatenation_windows,
            'step_contraction': self.step_contraction,
            'picard_power': self.picard_power,
            'q_bound_factor': self.q_bound_factor,
        }


def derived_constants(p: HdviProblem, rule: str = 'trapezoid') -> DerivedConstants:
    """Computes c, K and T* (plus the Picard and step constants) of a problem."""
    return DerivedConstants(p.m_B, p.kernel.sup_norm, p.grid.t_end, p.step_contraction(rule))


def build_rod_example(n_elements: int, grid: TimeGrid, safety_factor: float = 1.0) -> HdviProblem:
    """
    One-dimensional rod on (0, 1) with exact solution u(x, t) = x e^{-t}.

    Piecewise linear elements on a uniform mesh, x = 0 clamped and eliminated,
    contact DOF at x = 1 with bound 1, B = identity, R = identity, no compliance,
    and the load <f, v> = (1, v')_Q.

    Args:
        n_elements (int): Number of elements, at least 1.
        grid (TimeGrid): Time grid.
        safety_factor (float, optional): Kernel norm safety factor.
    Returns:
        HdviProblem: The rod problem; DOF j sits at x = (j+1)/n_elements.
    """
    if int(n_elements) != n_elements or n_elements < 1:
        raise ValidationError(f"n_elements must be a positive integer, got {n_elements}", field="problem.rod.n_elements")
    n = int(n_elements)
    h = 1.0 / n
    D = np.zeros((n, n))
    for e in range(n):
        D[e, e] = 1.0 / h
        if e > 0:
            D[e, e - 1] = -1.0 / h
    q = np.full(n, h)
    coordinates = np.arange(1, n + 1) * h
    space = DiscreteSpace(D, q, coordinates=coordinates)
    identity = np.eye(n)

    kernel = RelaxationKernel.constant(identity, grid, q, safety_factor=safety_factor)
    f = space.eps_adjoint @ np.ones(n)
    return HdviProblem(
        space=space,
        B=identity,
        kernel=kernel,
        compliance=ComplianceLaw.none(n),
        constraints=ConstraintSet(n, [(n - 1, 1.0)]),
        load=LoadHistory.constant(f, grid.t_end),
        grid=grid,
        name=f'rod_{n}',
    )


def rod_exact_solution(p: HdviProblem) -> np.ndarray:
    """Nodal values x_i e^{-t_n} of the rod's closed-form solution, shape (M+1, n_dof)."""
    if p.space.coordinates is None:
        raise ValidationError("problem has no nodal coordinates; not a rod problem", field="problem.rod")
    return np.exp(-p.grid.nodes)[:, None] * p.space.coordinates[None, :]

"""
Dense linear algebra, discrete V / Q metrics and quadrature of the Volterra
memory integral.
"""
# Imports: Standard Library
from typing import Callable, Sequence, Union

# Imports: Third Party
import numpy as np
import scipy.linalg

# Imports: Local
from .errors import NotSPD, DimensionMismatch, EmptyHistory, ValidationError

PIVOT_TOL = 1e-14
RULES = ('trapezoid', 'left_rectangle')


class TimeGrid:
    """
    Uniform time grid 0 = t_0 < ... < t_M = T.

    Args:
        t_end (float): Final time T > 0.
        steps (int): Number of steps M >= 1.
    """
    def __init__(self, t_end: float, steps: int):
        if not (np.isfinite(t_end) and t_end > 0):
            raise ValidationError(f"t_end must be positive and finite, got {t_end}", field="grid.t_end")
        if int(steps) != steps or steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {steps}", field="grid.steps")
        self.t_end = float(t_end)
        self.steps = int(steps)
        self.dt = self.t_end / self.steps
        nodes = np.arange(self.steps + 1, dtype=float) * self.dt
        nodes[-1] = self.t_end
        nodes.setflags(write=False)
        self.nodes = nodes

    def __len__(self):
        return self.steps + 1

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and self.t_end == other.t_end and self.steps == other.steps

    def __hash__(self):
        return hash((self.t_end, self.steps))

    def __repr__(self):
        return f"TimeGrid(t_end={self.t_end}, steps={self.steps})"


class SPDFactor:
    """
    Cholesky factorization of a symmetric positive definite matrix.

    The factorization is rejected when a pivot is not positive or when a
    squared pivot falls below 1e-14 times the largest diagonal entry.

    Args:
        A (array-like): Square SPD matrix.
    Raises:
        DimensionMismatch: If A is not square.
        NotSPD: If the factorization meets a non-positive or tiny pivot.
    """
    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise NotSPD("matrix has non-finite entries")
        self.n = A.shape[0]
        self.matrix = A
        try:
            lower = scipy.linalg.cholesky(A, lower=True)
        except np.linalg.LinAlgError as e:
            raise NotSPD(f"Cholesky factorization failed: {e}")
        scale = np.max(np.diag(A)) if self.n else 1.0
        pivots = np.diag(lower) ** 2
        if self.n and (scale <= 0 or np.min(pivots) < PIVOT_TOL * scale):
            raise NotSPD(f"pivot {np.min(pivots):.3e} below tolerance relative to diagonal scale {scale:.3e}")
        self._factor = (lower, True)
        self.lower = lower

    def solve(self, b) -> np.ndarray:
        """Solves A x = b (b may hold several right-hand sides as columns), with one refinement step."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise DimensionMismatch(f"right-hand side has {b.shape[0]} rows, matrix has {self.n}")
        x = scipy.linalg.cho_solve(self._factor, b)
        return x + scipy.linalg.cho_solve(self._factor, b - self.matrix @ x)

    def norm(self, x) -> float:
        """sqrt(x^T A x), the metric A induces."""
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(max(x @ self.matrix @ x, 0.0)))

    def dual_norm(self, y) -> float:
        """sqrt(y^T A^{-1} y), the dual of ``norm``."""
        y = np.asarray(y, dtype=float)
        w = scipy.linalg.solve_triangular(self.lower, y, lower=True)
        return float(np.linalg.norm(w))

    def node_norms(self, values) -> np.ndarray:
        """Row-wise metric norms of a (nodes, n) array."""
        values = np.asarray(values, dtype=float)
        sq = np.einsum('ni,ij,nj->n', values, self.matrix, values)
        return np.sqrt(np.clip(sq, 0.0, None))

    def node_dual_norms(self, values) -> np.ndarray:
        """Row-wise dual norms of a (nodes, n) array."""
        values = np.asarray(values, dtype=float)
        w = scipy.linalg.solve_triangular(self.lower, values.T, lower=True)
        return np.linalg.norm(np.atleast_2d(w), axis=0)


def spd_solve(A, b) -> np.ndarray:
    """
    Solves A x = b for a symmetric positive definite A.

    Args:
        A (array-like): SPD matrix (n x n).
        b (array-like): Right-hand side (n).
    Returns:
        np.ndarray: The solution x.
    Raises:
        NotSPD: If a Cholesky pivot is non-positive or below tolerance.
        DimensionMismatch: If the shapes do not match.
    """
    b = np.asarray(b, dtype=float)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"cannot solve system with matrix {A.shape} and right-hand side {b.shape}")
    return SPDFactor(A).solve(b)


def quadrature_weights(dt: float, n: int, rule: str = 'trapezoid') -> np.ndarray:
    """
    Weights of the memory quadrature on nodes 0..n.

    Args:
        dt (float): Step size.
        n (int): Current step index.
        rule (str): 'trapezoid' (end weights dt/2) or 'left_rectangle' (nodes 0..n-1, weight dt).
    Returns:
        np.ndarray: n+1 weights; entry n is the self weight (0 for left_rectangle).
    """
    if rule not in RULES:
        raise ValidationError(f"unknown quadrature rule '{rule}'", field="quadrature")
    w = np.full(n + 1, dt)
    if n == 0:
        return np.zeros(1)
    if rule == 'trapezoid':
        w[0] = w[n] = 0.5 * dt
    else:
        w[n] = 0.0
    return w


def memory_integral(R: Callable[[float], Union[float, np.ndarray]], history: Sequence, grid: TimeGrid, n: int, rule: str = 'trapezoid') -> np.ndarray:
    """
    Quadrature of the memory term int_0^{t_n} R(t_n - s) eps(u(s)) ds.

    Args:
        R (callable): Kernel evaluator t -> matrix (a scalar acts as a multiple of the identity).
        history (sequence): Strain vectors at nodes 0, 1, ...
        grid (TimeGrid): The time grid.
        n (int): Step index.
        rule (str): 'trapezoid' or 'left_rectangle'.
    Returns:
        np.ndarray: The strain-space vector approximating the integral.
    Raises:
        EmptyHistory: If the history does not reach the nodes the rule needs.
    """
    if n < 0 or n > grid.steps:
        raise ValidationError(f"step index {n} outside 0..{grid.steps}", field="n")
    needed = n + 1 if rule == 'trapezoid' else n
    if n > 0 and len(history) < needed:
        raise EmptyHistory(f"rule '{rule}' at step {n} needs {needed} history entries, got {len(history)}")

    if len(history):
        dim = np.atleast_1d(np.asarray(history[0], dtype=float)).shape[0]
    else:
        dim = np.atleast_2d(np.asarray(R(0.0), dtype=float)).shape[0]
    result = np.zeros(dim)
    if n == 0:
        return result

    weights = quadrature_weights(grid.dt, n, rule)
    t_n = grid.nodes[n]
    for k in range(n + 1):
        if weights[k] == 0.0:
            continue
        kernel = np.asarray(R(t_n - grid.nodes[k]), dtype=float)
        strain = np.atleast_1d(np.asarray(history[k], dtype=float))
        result += weights[k] * (kernel * strain if kernel.ndim == 0 else kernel @ strain)
    return result


class VolterraMemory:
    """
    Memory quadrature with the kernel cached at the lags j*dt of a uniform grid.

    Args:
        lags (np.ndarray): Kernel samples R(j*dt), shape (M+1, s, s).
        grid (TimeGrid): The time grid the lags belong to.
        rule (str): 'trapezoid' or 'left_rectangle'.
    """
    def __init__(self, lags: np.ndarray, grid: TimeGrid, rule: str = 'trapezoid'):
        if rule not in RULES:
            raise ValidationError(f"unknown quadrature rule '{rule}'", field="quadrature")
        lags = np.asarray(lags, dtype=float)
        if lags.ndim != 3 or lags.shape[0] != grid.steps + 1 or lags.shape[1] != lags.shape[2]:
            raise DimensionMismatch(f"expected lags of shape ({grid.steps + 1}, s, s), got {lags.shape}")
        self.lags = lags
        self.grid = grid
        self.rule = rule
        self.is_zero = not np.any(lags)
        self.self_weight = 0.5 * grid.dt if rule == 'trapezoid' else 0.0

    @property
    def strain_dim(self) -> int:
        return self.lags.shape[1]

    def history_term(self, strains: np.ndarray, n: int) -> np.ndarray:
        """Quadrature over nodes 0..n-1 (the part that does not involve node n)."""
        if n == 0 or self.is_zero:
            return np.zeros(self.strain_dim)
        w = quadrature_weights(self.grid.dt, n, self.rule)[:n]
        return np.einsum('kij,kj->i', self.lags[n:0:-1], w[:, None] * strains[:n])

    def self_term(self, strain: np.ndarray) -> np.ndarray:
        """Contribution of node n itself, (dt/2) R(0) eps_n for the trapezoid rule."""
        if self.self_weight == 0.0 or self.is_zero:
            return np.zeros(self.strain_dim)
        return self.self_weight * (self.lags[0] @ strain)

    def total(self, strains: np.ndarray, n: int) -> np.ndarray:
        """Full quadrature at node n using the given strain at node n."""
        if n == 0:
            return np.zeros(self.strain_dim)
        return self.history_term(strains, n) + self.self_term(strains[n])


def induced_norm(matrix: np.ndarray, sqrt_q: np.ndarray) -> float:
    """Operator norm of a strain-space matrix in the Q metric, ||Q^{1/2} R Q^{-1/2}||_2."""
    scaled = (sqrt_q[:, None] * np.asarray(matrix, dtype=float)) / sqrt_q[None, :]
    return float(np.linalg.norm(scaled, 2))


def lrho_norm(node_norms: np.ndarray, dt: float, rho: float) -> float:
    """
    L^rho(0,T) norm of nodal values with piecewise-constant quadrature on nodes 1..M.

    Args:
        node_norms (np.ndarray): Norms at nodes 0..M.
        dt (float): Step size.
        rho (float): Exponent in (1, inf).
    """
    tail = np.asarray(node_norms, dtype=float)[1:]
    return float((dt * np.sum(tail ** rho)) ** (1.0 / rho))

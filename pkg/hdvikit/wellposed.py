"""
Diagnostics of approximating sequences: the fixed-point residual (q), the sharp
slack of the perturbed inequality (p), the Gronwall bound that both residuals
control, and builders for the sequences used to exercise them.
"""
# Imports: Standard Library
import logging
from typing import Dict, List, Optional, Sequence

# Imports: Third Party
import numpy as np

# Imports: Local
from .errors import BoundViolated, ValidationError
from .hdvi import HistorySolver, Trajectory
from .logs import log_method_call
from .model import HdviProblem, LoadHistory
from .options import SolverOptions
from .parallel import parallel_map


class _InfeasibleType:
    """Marker returned by ``p_residual`` when a trajectory leaves the admissible set."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __bool__(self):
        return False

    def __repr__(self):
        return 'Infeasible'


Infeasible = _InfeasibleType()


class MemberDiagnostic:
    """
    Residuals and distance of one sequence member.

    Attributes:
        index (int): Position in the sequence.
        label (object): Sequence parameter (k, epsilon, ...).
        feasible (bool): Every node lies in U up to the activity tolerance.
        p_residual (float | None): Sharp slack of the perturbed inequality, None when infeasible.
        q_residual (float): max_n ||u_n - (Lambda u)_n||_V.
        distance (float): max_n ||u_n - u*_n||_V to the solution.
        p_bound (float | None): p_residual * K.
        q_bound (float): q_residual * q_bound_factor.
    """
    def __init__(self, index: int, label, feasible: bool, p_residual: Optional[float], q_residual: float, distance: float, K: float, q_factor: float, slack: float):
        self.index = index
        self.label = label
        self.feasible = feasible
        self.p_residual = p_residual if feasible else None
        self.q_residual = float(q_residual)
        self.distance = float(distance)
        self.p_bound = None if self.p_residual is None else self.p_residual * K
        self.q_bound = self.q_residual * q_factor
        self.p_ok = self.p_bound is None or self.distance <= self.p_bound + slack
        self.q_ok = self.distance <= self.q_bound + slack

    @property
    def passes(self) -> bool:
        return self.p_ok and self.q_ok

    def to_dict(self) -> dict:
        return {
            'member': self.index,
            'label': self.label,
            'feasible': self.feasible,
            'p_residual': self.p_residual,
            'q_residual': self.q_residual,
            'distance': self.distance,
            'p_bound': self.p_bound,
            'q_bound': self.q_bound,
            'passes': self.passes,
        }


class SequenceDiagnostic:
    """
    Per-member diagnostics of a sequence together with the bound constants.

    Attributes:
        members (list): MemberDiagnostic per sequence member.
        bound (float): The Gronwall constant e^{cT}/m_B, identical to DerivedConstants.K.
        q_bound_factor (float): Constant bounding the distance by the q residual.
        tail_ok (bool): The distance did not grow along the tail of the sequence.
    """
    def __init__(self, members: List[MemberDiagnostic], bound: float, q_bound_factor: float, slack: float):
        self.members = members
        self.bound = bound
        self.q_bound_factor = q_bound_factor
        self.slack = slack
        self.tail_ok = self._tail_check()

    def _tail_check(self) -> bool:
        if len(self.members) < 2:
            return True
        tail = self.members[len(self.members) // 2:]
        if tail[-1].q_residual > tail[0].q_residual + self.slack:
            return True
        return tail[-1].distance <= tail[0].distance + self.slack

    @property
    def q_residuals(self) -> List[float]:
        return [m.q_residual for m in self.members]

    @property
    def p_residuals(self) -> list:
        return [m.p_residual for m in self.members]

    @property
    def distances(self) -> List[float]:
        return [m.distance for m in self.members]

    @property
    def p_status(self) -> str:
        """'feasible', 'infeasible' or 'mixed' over the members."""
        feasible = [m.feasible for m in self.members]
        if all(feasible):
            return 'feasible'
        return 'infeasible' if not any(feasible) else 'mixed'

    @property
    def q_convergent(self) -> bool:
        """q residuals and distances shrink from the first to the last member."""
        q, d = self.q_residuals, self.distances
        if len(q) < 2:
            return q[0] <= self.slack if q else True
        return q[-1] < q[0] and d[-1] <= d[0] + self.slack and self.tail_ok

    @property
    def passes(self) -> bool:
        return all(m.passes for m in self.members) and self.tail_ok

    def first_violation(self) -> Optional[MemberDiagnostic]:
        for m in self.members:
            if not m.passes:
                return m
        return None

    def summary(self) -> Dict[str, object]:
        return {
            'members': len(self.members),
            'bound': self.bound,
            'q_bound_factor': self.q_bound_factor,
            'p_status': self.p_status,
            'q_convergent': self.q_convergent,
            'tail_ok': self.tail_ok,
            'passes': self.passes,
            'max_q_residual': max(self.q_residuals) if self.members else 0.0,
            'final_q_residual': self.q_residuals[-1] if self.members else 0.0,
            'final_distance': self.distances[-1] if self.members else 0.0,
        }


class WellPosedness:
    """
    p- and q-approximating sequence diagnostics for one problem.

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
        self._solution = None

    def solution(self, tol: Optional[float] = None) -> Trajectory:
        """Forward solution, computed once."""
        if self._solution is None:
            self._solution = self.history.solve_forward(tol)
        return self._solution

    @log_method_call
    def q_residual(self, u: Trajectory, tol: Optional[float] = None) -> float:
        """
        max over nodes of ||u_n - (Lambda u)_n||_V.

        Args:
            u (Trajectory): Trajectory on the problem grid.
            tol (float, optional): Tolerance of the node solves inside Lambda.
        Returns:
            float: The residual, >= 0.
        """
        tol = self.options.inner_tol if tol is None else tol * self.options.inner_tol_factor
        lam = self.history.apply_lambda(u, tol)
        return float(np.max(self.problem.space.metric.node_norms(u.values - lam.values)))

    def is_feasible(self, u: Trajectory) -> bool:
        constraints = self.problem.constraints
        if not len(constraints.indices):
            return True
        excess = u.values[:, constraints.indices] - constraints.bounds
        return bool(np.all(excess <= constraints.activity_tolerance(self.options.act_tol)))

    def p_residual_profile(self, u: Trajectory, tol: Optional[float] = None):
        """
        Sharp slack per node: ||projection of G^{-1} r_n onto the tangent cone of U at u_n||_V,
        r_n = f_n - eps*(memory) - (W + P)(u_n).

        Returns:
            np.ndarray | Infeasible: Per-node slacks, or Infeasible.
        """
        self.history._check_grid(u)
        if not self.is_feasible(u):
            return Infeasible
        tol = self.options.inner_tol if tol is None else tol
        constraints = self.problem.constraints
        tau_act = constraints.activity_tolerance(self.options.act_tol)
        omegas = self.history.memory_rhs(u)
        metric = self.problem.space.metric

        def node(n):
            u_n = u.values[n]
            r = omegas[n] - self.problem.W @ u_n - self.problem.compliance.apply(u_n)
            active = constraints.bounds - u_n[constraints.indices] <= tau_act
            return metric.norm(self.evi.project_tangent(active, r, tol))

        return np.array(parallel_map(node, range(len(u)), threads=self.options.threads))

    @log_method_call
    def p_residual(self, u: Trajectory, tol: Optional[float] = None):
        """
        Smallest uniform epsilon for which u satisfies the inequality with slack epsilon ||v - u_n||_V.

        Args:
            u (Trajectory): Trajectory on the problem grid.
            tol (float, optional): Tolerance of the cone projections.
        Returns:
            float | Infeasible: max of the per-node slacks, or Infeasible when a node leaves U.
        """
        profile = self.p_residual_profile(u, tol)
        if profile is Infeasible:
            return Infeasible
        return float(np.max(profile))

    @log_method_call
    def verify_error_bound(self, members: Sequence[Trajectory], tol: Optional[float] = None, solution: Optional[Trajectory] = None, slack: float = 1e-8, labels: Optional[Sequence] = None, raise_on_violation: bool = True) -> SequenceDiagnostic:
        """
        Checks ||u_k - u*||_C(V) <= p_k K for feasible members and
        ||u_k - u*||_C(V) <= q_k q_bound_factor for all members, plus a
        non-growing distance along the tail of the sequence.

        Args:
            members (sequence): Trajectories on the problem grid.
            tol (float, optional): Solver tolerance.
            solution (Trajectory, optional): Reference solution. Defaults to the forward solution.
            slack (float, optional): Absolute slack of every check. Defaults to 1e-8.
            labels (sequence, optional): Sequence parameters reported per member.
            raise_on_violation (bool, optional): Raise instead of returning a failing diagnostic.
        Returns:
            SequenceDiagnostic: The full diagnostic.
        Raises:
            BoundViolated: If a check fails and ``raise_on_violation`` is set.
        """
        if not members:
            raise ValidationError("the sequence has no members", field="wellposed.members")
        labels = list(range(1, len(members) + 1)) if labels is None else list(labels)
        if len(labels) != len(members):
            raise ValidationError(f"{len(labels)} labels for {len(members)} members", field="wellposed.labels")
        reference = solution if solution is not None else self.solution(tol)
        K, q_factor = self.constants.K, self.constants.q_bound_factor

        def diagnose(k):
            u = members[k]
            p = self.p_residual(u)
            return MemberDiagnostic(
                index=k,
                label=labels[k],
                feasible=p is not Infeasible,
                p_residual=None if p is Infeasible else p,
                q_residual=self.q_residual(u, tol),
                distance=u.distance(reference, self.problem),
                K=K,
                q_factor=q_factor,
                slack=slack,
            )

        rows = [diagnose(k) for k in range(len(members))]
        diagnostic = SequenceDiagnostic(rows, K, q_factor, slack)
        if self.logger:
            self.logger.info(f"Sequence of {len(rows)} members: {diagnostic.summary()}")

        if raise_on_violation:
            bad = diagnostic.first_violation()
            if bad is not None:
                which = 'p' if not bad.p_ok else 'q'
                raise BoundViolated(
                    f"member {bad.index} ({bad.label}) violates the {which} bound: distance {bad.distance:.3e}",
                    member=bad.index, diagnostic=diagnostic,
                )
            if not diagnostic.tail_ok:
                raise BoundViolated("distance grows along the tail while the q residual shrinks", member=len(rows) - 1, diagnostic=diagnostic)
        return diagnostic

    # --- Sequence builders ---
    def shifted_sequence(self, ks: Sequence[int], base: Optional[Trajectory] = None, tol: Optional[float] = None) -> List[Trajectory]:
        """u_k = u* + 1/k on every DOF: converges uniformly but leaves U wherever a bound is active."""
        base = base if base is not None else self.solution(tol)
        return [Trajectory(base.grid, base.values + 1.0 / k, {'label': k}) for k in _positive(ks, 'wellposed.ks')]

    def p_approximating_sequence(self, epsilons: Sequence[float], direction=None, tol: Optional[float] = None) -> List[Trajectory]:
        """
        Solutions for the loads f + eps_k eta with ||eta||_{V*} = 1.

        Each member satisfies the inequality for f with slack eps_k ||v - u_k||_V.
        The default eta = -G x / ||x||_V with x = G^{-1} f(0) points into the admissible set.

        Args:
            epsilons (sequence): Positive slacks.
            direction (array-like, optional): Constant dual direction, normalized internally.
            tol (float, optional): Solver tolerance.
        Returns:
            list: Trajectories with 'label' (eps_k) in meta.
        """
        metric = self.problem.space.metric
        if direction is None:
            x = metric.solve(self.problem.loads[0])
            if not np.any(x):
                x = np.ones(self.problem.n_dof)
            eta = -(self.problem.space.v_metric @ x)
        else:
            eta = np.asarray(direction, dtype=float)
            if eta.shape != (self.problem.n_dof,):
                raise ValidationError(f"direction must have {self.problem.n_dof} entries", field="wellposed.direction")
        scale = metric.dual_norm(eta)
        if scale == 0.0:
            raise ValidationError("direction has zero dual norm", field="wellposed.direction")
        eta = eta / scale
        grid = self.problem.grid
        eta_load = LoadHistory.constant(eta, grid.t_end)

        def member(eps):
            solver = HistorySolver(self.problem.with_load(self.problem.load + eps * eta_load), self.options)
            u = solver.solve_forward(tol)
            return Trajectory(grid, u.values, {'label': eps})

        return parallel_map(member, list(_positive(epsilons, 'wellposed.epsilons')), threads=self.options.threads)

    def picard_sequence(self, count: int, tol: Optional[float] = None) -> List[Trajectory]:
        """Lambda^k(0) for k = 1..count."""
        if int(count) < 1:
            raise ValidationError(f"count must be at least 1, got {count}", field="wellposed.count")
        u = Trajectory.zeros(self.problem.grid, self.problem.n_dof)
        members = []
        for k in range(1, int(count) + 1):
            u = self.history.apply_lambda(u, tol)
            members.append(Trajectory(u.grid, u.values, {'label': k}))
        return members

    def blend_sequence(self, ks: Sequence[int], base: Optional[Trajectory] = None, tol: Optional[float] = None) -> List[Trajectory]:
        """(1 - 1/k) u*: feasible whenever 0 is admissible, converges to u*."""
        base = base if base is not None else self.solution(tol)
        return [Trajectory(base.grid, (1.0 - 1.0 / k) * base.values, {'label': k}) for k in _positive(ks, 'wellposed.ks')]


def _positive(values, field: str) -> list:
    values = list(values)
    if not values or any(not v > 0 for v in values):
        raise ValidationError(f"values must be positive and non-empty, got {values}", field=field)
    return values

"""
Runs one scenario: builds the problem, dispatches the requested mode, writes
CSV and JSON artifacts and the run manifest.
"""
# Imports: Standard Library
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

# Imports: Third Party
import numpy as np

# Imports: Local
from .control import ControlProblem
from .errors import HdviError, InternalError
from .hdvi import HistorySolver
from .logs import setup_logging
from .model import derived_constants, rod_exact_solution
from .options import SolverOptions
from .scenario import Scenario
from .sensitivity import SensitivitySolver
from .storage import Storage
from .wellposed import WellPosedness

MANIFEST = 'manifest.json'
ERROR_DOCUMENT = 'error.json'


class RunManifest:
    """
    Provenance and summary of one run.

    Attributes:
        scenario (str): Scenario name.
        scenario_hash (str): sha256 of the canonical scenario document.
        mode (str): Solver mode.
        status (str): 'ok' or 'failed'.
        constants (dict): DerivedConstants of the problem.
        metrics (dict): Per-mode summary metrics.
        outputs (list): Files written, relative to the output directory.
        wall_clock_seconds (float): Elapsed time.
        error (dict): Error document when the run failed.
    """
    def __init__(self, scenario: str, scenario_hash: str, mode: str):
        self.scenario = scenario
        self.scenario_hash = scenario_hash
        self.mode = mode
        self.status = 'running'
        self.constants: Dict[str, Any] = {}
        self.metrics: Dict[str, Any] = {}
        self.outputs: List[str] = []
        self.wall_clock_seconds = 0.0
        self.error: Optional[Dict[str, Any]] = None

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def to_dict(self) -> Dict[str, Any]:
        doc = {
            'scenario': self.scenario,
            'scenario_hash': self.scenario_hash,
            'mode': self.mode,
            'status': self.status,
            'constants': self.constants,
            'metrics': self.metrics,
            'outputs': sorted(self.outputs),
            'wall_clock_seconds': self.wall_clock_seconds,
        }
        if self.error is not None:
            doc['error'] = self.error
        return doc

    def save(self, out_dir: Union[str, Path]) -> Path:
        return Storage.save_json(Path(out_dir) / MANIFEST, self.to_dict())


def write_failure(out_dir: Union[str, Path], error: HdviError, manifest: Optional[RunManifest] = None, name: str = 'unknown') -> RunManifest:
    """Writes error.json and a manifest marked 'failed' listing whatever was already written."""
    out_dir = Path(out_dir)
    manifest = manifest or RunManifest(name, '', 'unknown')
    Storage.save_json(out_dir / ERROR_DOCUMENT, error.to_dict())
    manifest.status = 'failed'
    manifest.error = error.to_dict()
    if ERROR_DOCUMENT not in manifest.outputs:
        manifest.outputs.append(ERROR_DOCUMENT)
    manifest.save(out_dir)
    return manifest


class Runner:
    """
    Executes a scenario in one of the solver modes.

    Args:
        scenario (Scenario): Validated scenario.
        out_dir (str | Path): Output directory, created when missing.
        options (SolverOptions, optional): Options overriding the scenario's.
        steps (int, optional): Number of time steps overriding the scenario's.
        log_dir (str | Path, optional): Directory for log files.
    """
    def __init__(self, scenario: Scenario, out_dir: Union[str, Path], options: Optional[SolverOptions] = None, steps: Optional[int] = None, log_dir: Optional[Union[str, Path]] = None):
        self.scenario = scenario
        self.out_dir = Path(out_dir)
        self.options = options or scenario.options
        self.grid = scenario.grid(steps)
        self.log_dir = log_dir
        self.logger = setup_logging('runner', log_dir) if log_dir else None
        self.manifest = RunManifest(scenario.name, scenario.hash, scenario.mode)

    def _logger(self, component: str) -> Optional[logging.Logger]:
        return setup_logging(component, self.log_dir) if self.log_dir else None

    def _write(self, writer, obj, filename: str) -> Path:
        path = writer(obj, self.out_dir / filename)
        self.manifest.outputs.append(filename)
        return path

    def _series(self, filename: str, columns: Dict[str, Any]) -> Path:
        path = Storage.save_series(self.out_dir / filename, columns)
        self.manifest.outputs.append(filename)
        return path

    def run(self) -> RunManifest:
        """
        Runs the scenario and writes its artifacts.

        Returns:
            RunManifest: The manifest (also written to manifest.json).
        Raises:
            HdviError: Any solver or validation error, after error.json and a failed manifest were written.
                Other exceptions are reported as InternalError.
        """
        start = time.perf_counter()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if self.logger:
            self.logger.info(f"Running scenario '{self.scenario.name}' ({self.scenario.mode}) into {self.out_dir}")
        try:
            problem = self.scenario.build_problem(self.grid, self.options)
            constants = derived_constants(problem, self.options.quadrature)
            self.manifest.constants = constants.to_dict()
            Storage.save_json(self.out_dir / 'metadata.json', {
                'scenario': self.scenario.document,
                'scenario_hash': self.scenario.hash,
                'options': self.options.to_dict(),
                'grid': {'t_end_seconds': self.grid.t_end, 'steps': self.grid.steps},
                'constants': constants.to_dict(),
            })
            self.manifest.outputs.append('metadata.json')
            handler = getattr(self, f'_run_{self.scenario.mode}')
            self.manifest.metrics = handler(problem)
        except Exception as e:
            error = e if isinstance(e, HdviError) else InternalError.wrap(e)
            self.manifest.wall_clock_seconds = time.perf_counter() - start
            if self.logger:
                self.logger.error(f"Run failed: {type(error).__name__}: {error.message}")
            write_failure(self.out_dir, error, self.manifest)
            if error is e:
                raise
            raise error from e
        self.manifest.status = 'ok'
        self.manifest.wall_clock_seconds = time.perf_counter() - start
        self.manifest.save(self.out_dir)
        if self.logger:
            self.logger.info(f"Run complete in {self.manifest.wall_clock_seconds:.3f} s")
        return self.manifest

    # Modes
    # ---------------------------------------------------------------------------------------------
    def _run_forward(self, problem) -> Dict[str, Any]:
        solver = HistorySolver(problem, self.options, self._logger('hdvi'))
        u = solver.solve_forward()
        check = solver.equivalence_check(u)
        self._write(Storage.save_trajectory, u, 'trajectory.csv')
        metrics = {
            'max_vi_residual': check['max_vi_residual'],
            'max_fixedpoint_residual': check['max_fixedpoint_residual'],
            'max_evi_iterations': int(np.max(u.meta['evi_iterations'])),
            'max_inner_iterations': int(np.max(u.meta['inner_iterations'])),
            'final_v_norm': problem.space.v_norm(u.values[-1]),
        }
        if problem.space.coordinates is not None:
            metrics['sup_error_vs_exact'] = float(np.max(np.abs(u.values - rod_exact_solution(problem))))
        return metrics

    def _run_picard(self, problem) -> Dict[str, Any]:
        solver = HistorySolver(problem, self.options, self._logger('hdvi'))
        forward = solver.solve_forward()
        u = solver.solve_picard()
        self._write(Storage.save_trajectory, u, 'picard.csv')
        changes = u.meta['changes']
        ratios = np.concatenate([[np.nan], u.meta['ratios']])
        self._series('picard_sweeps.csv', {
            'sweep': list(range(1, len(changes) + 1)),
            'change': changes.tolist(),
            'ratio': [None if np.isnan(r) else float(r) for r in ratios],
        })
        return {
            'sweeps': u.meta['sweeps'],
            'final_change': float(changes[-1]),
            'forward_agreement': u.distance(forward, problem),
            'picard_power': solver.constants.picard_power,
            'picard_constants': u.meta['picard_constants'],
        }

    def _run_sensitivity(self, problem) -> Dict[str, Any]:
        inputs = self.scenario.sensitivity_inputs(problem)
        solver = SensitivitySolver(problem, self.options, self._logger('sensitivity'))
        base = solver.history.solve_forward()
        direction, taus, rho = inputs['direction'], inputs['taus'], inputs['exponent']
        report = solver.fd_validate(direction, taus, rho=rho, base=base)
        du = report['derivative']
        self._write(Storage.save_trajectory, base, 'trajectory.csv')
        self._write(Storage.save_derivative_trajectory, du, 'derivative.csv')
        columns = {'tau': taus, 'fd_error': report['errors']}
        metrics = {
            'fd_errors': report['errors'],
            'fd_monotone': report['monotone'],
            'fd_final_ok': report['final_ok'],
            'fd_passes': report['passes'],
            'amplification': report['amplification'],
            'flagged_nodes': len(du.meta['flagged_nodes']),
            'kink_nodes': len(du.meta['kink_nodes']),
            'max_derivative_residual': float(np.max(du.meta['residuals'])),
        }
        if inputs['hadamard']:
            perturbations = [(1.0 + tau) * direction for tau in taus]
            probe = solver.hadamard_probe(direction, perturbations, taus, rho=rho, base=base)
            columns.update({
                'hadamard_error': probe['errors'],
                'distance': probe['distances'],
                'bound': probe['bounds'],
                'within_bound': probe['within_bound'],
            })
            metrics.update({
                'hadamard_errors': probe['errors'],
                'hadamard_converged': probe['converged'],
                'hadamard_passes': probe['passes'],
            })
        self._series('fd_errors.csv', columns)
        return metrics

    def _run_control(self, problem) -> Dict[str, Any]:
        inputs = self.scenario.control_inputs(problem)
        control = ControlProblem(problem, inputs['map'], inputs['alpha'], inputs['beta'],
                                 np.zeros(problem.n_dof), self.options, self._logger('control'))
        if inputs['target'] is None:
            control.target = control.target_from_control(inputs['target_control'])
        else:
            control.target = inputs['target']
        result = control.minimize(inputs['initial'], tol=inputs['stationarity_tol'], max_iters=inputs['max_iterations'])
        state = control.state(result.control)
        self._write(Storage.save_control, result.control, 'control.csv')
        self._write(Storage.save_history, result.history, 'cost_history.csv')
        self._write(Storage.save_trajectory, state, 'state.csv')
        initial, final = result.history[0].total, result.history[-1].total
        return {
            'status': result.status,
            'iterations': result.iterations,
            'initial_cost': initial,
            'final_cost': final,
            'cost_ratio': final / initial if initial > 0 else 0.0,
            'probe_min': result.probe_min,
            'target': control.target,
        }

    def _run_wellposed(self, problem) -> Dict[str, Any]:
        inputs = self.scenario.wellposed_inputs()
        checker = WellPosedness(problem, self.options, self._logger('wellposed'))
        recipe = inputs['recipe']
        if recipe == 'shifted':
            labels = inputs['ks']
            members = checker.shifted_sequence(labels)
        elif recipe == 'p_approximating':
            labels = inputs['epsilons']
            members = checker.p_approximating_sequence(labels)
        elif recipe == 'picard':
            labels = list(range(1, inputs['count'] + 1))
            members = checker.picard_sequence(inputs['count'])
        else:
            labels = inputs['ks']
            members = checker.blend_sequence(labels)
        diagnostic = checker.verify_error_bound(members, slack=inputs['slack'], labels=labels)
        self._write(Storage.save_diagnostic, diagnostic, 'sequence.csv')
        metrics = diagnostic.summary()
        metrics['recipe'] = recipe
        metrics['p_infeasible'] = diagnostic.p_status == 'infeasible'
        return metrics

    def _run_rod_regression(self, problem) -> Dict[str, Any]:
        inputs = self.scenario.regression_inputs()
        solver = HistorySolver(problem, self.options, self._logger('hdvi'))
        u = solver.solve_forward()
        errors = np.abs(u.values - rod_exact_solution(problem))
        sup_error = float(np.max(errors))
        check = solver.equivalence_check(u)
        self._write(Storage.save_trajectory, u, 'trajectory.csv')
        self._series('errors.csv', {
            'node': list(range(len(u))),
            't_seconds': u.grid.nodes.tolist(),
            'max_abs_error': np.max(errors, axis=1).tolist(),
        })
        metrics = {
            'sup_error': sup_error,
            'passes': sup_error <= inputs['max_error'],
            'max_vi_residual': check['max_vi_residual'],
            'max_fixedpoint_residual': check['max_fixedpoint_residual'],
        }
        if inputs['refine']:
            fine_grid = self.scenario.grid(2 * self.grid.steps)
            fine = self.scenario.build_problem(fine_grid, self.options)
            u_fine = HistorySolver(fine, self.options).solve_forward()
            fine_error = float(np.max(np.abs(u_fine.values - rod_exact_solution(fine))))
            metrics['sup_error_refined'] = fine_error
            metrics['refinement_ratio'] = sup_error / fine_error if fine_error > 0 else float('inf')
        if inputs['picard']:
            picard = solver.solve_picard()
            metrics['picard_agreement'] = picard.distance(u, problem)
            metrics['picard_sweeps'] = picard.meta['sweeps']
        return metrics

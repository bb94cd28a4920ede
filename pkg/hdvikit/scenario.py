"""
Scenario documents: schema validation and construction of the problem, the
solver options and the mode-specific inputs.

The document layout is described in docs/scenario_schema.md.
"""
# Imports: Standard Library
import copy
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

# Imports: Third Party
import numpy as np

# Imports: Local
from .algebra import TimeGrid
from .control import BODY_AND_TRACTION, CHANNEL_KINDS, Control, ControlMap
from .errors import DimensionMismatch, ValidationError
from .model import (ComplianceLaw, ConstraintSet, DiscreteSpace, HdviProblem, LoadHistory,
                    RelaxationKernel, build_rod_example)
from .options import SolverOptions
from .storage import Storage

MODES = ('forward', 'picard', 'sensitivity', 'control', 'wellposed', 'rod_regression')
RECIPES = ('shifted', 'p_approximating', 'picard', 'converging')
KERNEL_TYPES = ('constant', 'exponential', 'table', 'zero')
TOP_LEVEL = {'name', 'mode', 'grid', 'options', 'problem', 'sensitivity', 'control', 'wellposed', 'regression', 'description'}


def parse_matrix(value: Any, field: str) -> np.ndarray:
    """
    Reads a dense matrix given as {"rows", "cols", "entries"} (row-major) or as nested lists.

    Raises:
        ValidationError: If the shape is inconsistent or an entry is not a number.
    """
    if isinstance(value, dict):
        missing = {'rows', 'cols', 'entries'} - set(value)
        if missing:
            raise ValidationError(f"missing {sorted(missing)}", field=field)
        rows, cols, entries = value['rows'], value['cols'], value['entries']
        if not isinstance(rows, int) or not isinstance(cols, int) or rows < 1 or cols < 1:
            raise ValidationError("rows and cols must be positive integers", field=field)
        if not isinstance(entries, list) or len(entries) != rows * cols:
            raise ValidationError(f"expected {rows * cols} entries, got {len(entries) if isinstance(entries, list) else type(entries).__name__}", field=field)
        return np.asarray(_numbers(entries, field), dtype=float).reshape(rows, cols)
    if isinstance(value, list) and value and all(isinstance(row, list) for row in value):
        widths = {len(row) for row in value}
        if len(widths) != 1 or 0 in widths:
            raise ValidationError(f"rows have different lengths {sorted(widths)}", field=field)
        return np.asarray([_numbers(row, field) for row in value], dtype=float)
    raise ValidationError("expected a matrix ({rows, cols, entries} or a list of rows)", field=field)


def parse_vector(value: Any, field: str, length: Optional[int] = None) -> np.ndarray:
    if isinstance(value, dict) and 'entries' in value:
        value = value['entries']
    if not isinstance(value, list) or not value:
        raise ValidationError("expected a non-empty list of numbers", field=field)
    vector = np.asarray(_numbers(value, field), dtype=float)
    if length is not None and vector.shape[0] != length:
        raise ValidationError(f"expected {length} entries, got {vector.shape[0]}", field=field)
    return vector


def _numbers(values: list, field: str) -> list:
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"expected numbers, found {v!r}", field=field)
    return values


def _block(document: Dict[str, Any], key: str, required: bool = False) -> Dict[str, Any]:
    block = document.get(key)
    if block is None:
        if required:
            raise ValidationError("block is required", field=key)
        return {}
    if not isinstance(block, dict):
        raise ValidationError("expected an object", field=key)
    return block


def _number(block: Dict[str, Any], key: str, field: str, default: Any = None, positive: bool = False) -> Any:
    value = block.get(key, default)
    if value is None:
        raise ValidationError("is required", field=f"{field}.{key}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"expected a number, got {value!r}", field=f"{field}.{key}")
    if positive and not value > 0:
        raise ValidationError(f"must be positive, got {value}", field=f"{field}.{key}")
    return value


def _integer(value: Any, field: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"expected an integer, got {value!r}", field=field)
    if value < minimum:
        raise ValidationError(f"must be at least {minimum}, got {value}", field=field)
    return value


def _flag(block: Dict[str, Any], key: str, field: str, default: bool) -> bool:
    value = block.get(key, default)
    if not isinstance(value, bool):
        raise ValidationError(f"expected true or false, got {value!r}", field=f"{field}.{key}")
    return value


def _bounds(value: Any, field: str, n_channels: int):
    if value is None or (isinstance(value, (int, float)) and not isinstance(value, bool)):
        return
    parse_vector(value, field, n_channels)


class Scenario:
    """
    A validated scenario document.

    Args:
        document (dict): Parsed scenario.
        source (str | Path, optional): File the document came from.
    Raises:
        ValidationError: If the document does not follow the schema.
    """
    def __init__(self, document: Dict[str, Any], source: Optional[Union[str, Path]] = None):
        self.document = copy.deepcopy(document)
        self.source = None if source is None else str(source)
        self.hash = Storage.scenario_hash(document)

        unknown = set(document) - TOP_LEVEL
        if unknown:
            raise ValidationError(f"unknown top-level keys {sorted(unknown)}", field="scenario")
        self.mode = document.get('mode')
        if self.mode not in MODES:
            raise ValidationError(f"must be one of {MODES}, got {self.mode!r}", field="mode")
        self.name = str(document.get('name') or (Path(source).stem if source else self.mode))

        grid = _block(document, 'grid', required=True)
        self.t_end = _number(grid, 't_end_seconds', 'grid', positive=True)
        self.steps = _number(grid, 'steps', 'grid', positive=True)
        options = _block(document, 'options')
        self.options = SolverOptions.from_dict(options)
        self.problem_block = _block(document, 'problem', required=True)
        self._check_problem_block()
        self._check_mode_block()

    @classmethod
    def from_file(cls, filename: Union[str, Path]) -> 'Scenario':
        """Parses and validates a scenario file."""
        return cls(Storage.load_scenario(filename), source=filename)

    # Validation
    # ---------------------------------------------------------------------------------------------
    def _check_problem_block(self):
        block = self.problem_block
        if 'rod' in block:
            rod = block['rod']
            if not isinstance(rod, dict):
                raise ValidationError("expected an object", field="problem.rod")
            n = rod.get('n_elements')
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ValidationError(f"must be a positive integer, got {n!r}", field="problem.rod.n_elements")
            extra = set(block) - {'rod'}
            if extra:
                raise ValidationError(f"rod problems take no other keys, found {sorted(extra)}", field="problem")
        else:
            missing = {'strain_map', 'q_weights', 'stiffness', 'kernel', 'load'} - set(block)
            if missing:
                raise ValidationError(f"explicit problems need {sorted(missing)}", field="problem")
        if self.mode == 'rod_regression' and 'rod' not in block:
            raise ValidationError("rod_regression needs a rod problem", field="problem.rod")

    def _check_mode_block(self):
        if self.mode == 'sensitivity':
            block = _block(self.document, 'sensitivity')
            taus = parse_vector(block.get('taus', [1e-1, 1e-2, 1e-3, 1e-4]), 'sensitivity.taus')
            if np.any(taus <= 0):
                raise ValidationError("taus must be positive", field="sensitivity.taus")
            _number(block, 'exponent', 'sensitivity', default=2.0)
            _flag(block, 'hadamard', 'sensitivity', True)
            direction = block.get('direction', 'load')
            if direction != 'load' and not isinstance(direction, dict):
                raise ValidationError("expected 'load' or a load table", field="sensitivity.direction")
        elif self.mode == 'control':
            block = _block(self.document, 'control', required=True)
            channels = block.get('channels')
            if not isinstance(channels, list) or not channels:
                raise ValidationError("expected a non-empty list", field="control.channels")
            for j, channel in enumerate(channels):
                self._check_channel(channel, f"control.channels[{j}]")
            _number(block, 'alpha', 'control', default=1.0)
            _number(block, 'beta', 'control', positive=True)
            _number(block, 'stationarity_tol', 'control', default=1e-6, positive=True)
            _integer(block.get('max_iterations', 50), 'control.max_iterations')
            n_ch = len(channels)
            parse_vector(block.get('initial', [0.0] * n_ch), 'control.initial', n_ch)
            _bounds(block.get('lower'), 'control.lower', n_ch)
            _bounds(block.get('upper'), 'control.upper', n_ch)
            if 'target' not in block and 'target_control' not in block:
                raise ValidationError("need 'target' or 'target_control'", field="control")
            if 'target_control' in block and 'target' not in block:
                parse_vector(block['target_control'], 'control.target_control', n_ch)
        elif self.mode == 'wellposed':
            block = _block(self.document, 'wellposed', required=True)
            if block.get('recipe') not in RECIPES:
                raise ValidationError(f"must be one of {RECIPES}, got {block.get('recipe')!r}", field="wellposed.recipe")
            ks = block.get('ks', [1, 10, 100, 1000])
            if not isinstance(ks, list) or not ks:
                raise ValidationError("expected a non-empty list of integers", field="wellposed.ks")
            for j, k in enumerate(ks):
                _integer(k, f"wellposed.ks[{j}]")
            _integer(block.get('count', 10), 'wellposed.count')
            if 'epsilons' in block:
                epsilons = parse_vector(block['epsilons'], 'wellposed.epsilons')
                if np.any(epsilons <= 0):
                    raise ValidationError("epsilons must be positive", field="wellposed.epsilons")
            _number(block, 'slack', 'wellposed', default=1e-8)
        elif self.mode == 'rod_regression':
            block = _block(self.document, 'regression')
            _flag(block, 'refine', 'regression', True)
            _flag(block, 'picard', 'regression', True)
            _number(block, 'max_error', 'regression', default=1e-3, positive=True)

    @staticmethod
    def _check_channel(channel: Any, field: str):
        if not isinstance(channel, dict):
            raise ValidationError("expected {dof, weight, kind}", field=field)
        unknown = set(channel) - {'dof', 'weight', 'kind'}
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)}", field=field)
        if 'dof' not in channel:
            raise ValidationError("is required", field=f"{field}.dof")
        _integer(channel['dof'], f"{field}.dof", minimum=0)
        _number(channel, 'weight', field, default=1.0, positive=True)
        if channel.get('kind', 'traction') not in CHANNEL_KINDS:
            raise ValidationError(f"must be one of {CHANNEL_KINDS}, got {channel.get('kind')!r}", field=f"{field}.kind")

    # Construction
    # ---------------------------------------------------------------------------------------------
    def grid(self, steps: Optional[int] = None) -> TimeGrid:
        return TimeGrid(self.t_end, self.steps if steps is None else steps)

    def solver_options(self, **overrides) -> SolverOptions:
        return self.options.override(**overrides)

    def build_problem(self, grid: Optional[TimeGrid] = None, options: Optional[SolverOptions] = None) -> HdviProblem:
        """
        Builds the discrete problem described by the document.

        Args:
            grid (TimeGrid, optional): Grid overriding the document's grid.
            options (SolverOptions, optional): Options supplying the kernel safety factor.
        Returns:
            HdviProblem: The problem.
        Raises:
            ValidationError: If matrices are malformed or dimensions disagree.
        """
        grid = grid or self.grid()
        options = options or self.options
        block = self.problem_block
        if 'rod' in block:
            problem = build_rod_example(block['rod']['n_elements'], grid, safety_factor=options.safety_factor)
            problem.name = self.name
            return problem

        D = parse_matrix(block['strain_map'], 'problem.strain_map')
        q = parse_vector(block['q_weights'], 'problem.q_weights', D.shape[0])
        space = DiscreteSpace(D, q)
        n = space.n_dof
        B = parse_matrix(block['stiffness'], 'problem.stiffness')
        kernel = self._kernel(block['kernel'], grid, q, options)
        compliance = self._compliance(block.get('compliance'), n)
        constraints = self._constraints(block.get('constraints', []), n)
        load = self.load_history(block['load'], n, 'problem.load')
        try:
            return HdviProblem(space, B, kernel, compliance, constraints, load, grid, name=self.name)
        except DimensionMismatch as e:
            raise ValidationError(e.message, field="problem")

    def _kernel(self, entry: Any, grid: TimeGrid, q: np.ndarray, options: SolverOptions) -> RelaxationKernel:
        if not isinstance(entry, dict):
            raise ValidationError("expected an object", field="problem.kernel")
        kind = entry.get('type')
        if kind not in KERNEL_TYPES:
            raise ValidationError(f"must be one of {KERNEL_TYPES}, got {kind!r}", field="problem.kernel.type")
        kwargs = {'safety_factor': options.safety_factor, 'modulus': entry.get('modulus')}
        if kind == 'zero':
            return RelaxationKernel.zero(len(q), grid, q, **kwargs)
        if kind == 'table':
            times = parse_vector(entry.get('times_seconds'), 'problem.kernel.times_seconds')
            mats = entry.get('matrices')
            if not isinstance(mats, list):
                raise ValidationError("expected a list of matrices", field="problem.kernel.matrices")
            parsed = [parse_matrix(m, f'problem.kernel.matrices[{k}]') for k, m in enumerate(mats)]
            return RelaxationKernel.table(times, parsed, grid, q, **kwargs)
        matrix = parse_matrix(entry.get('matrix'), 'problem.kernel.matrix')
        if kind == 'constant':
            return RelaxationKernel.constant(matrix, grid, q, **kwargs)
        rate = _number(entry, 'rate_per_second', 'problem.kernel')
        return RelaxationKernel.exponential(matrix, rate, grid, q, **kwargs)

    @staticmethod
    def _compliance(entry: Any, n: int) -> ComplianceLaw:
        if entry is None:
            return ComplianceLaw.none(n)
        if not isinstance(entry, dict):
            raise ValidationError("expected an object", field="problem.compliance")
        dofs = entry.get('dofs', [])
        return ComplianceLaw(n, dofs, entry.get('stiffness', []), entry.get('boundary_weights'))

    @staticmethod
    def _constraints(entry: Any, n: int) -> ConstraintSet:
        if not isinstance(entry, list):
            raise ValidationError("expected a list of {dof, bound}", field="problem.constraints")
        pairs = []
        for k, item in enumerate(entry):
            if not isinstance(item, dict) or 'dof' not in item or 'bound' not in item:
                raise ValidationError("expected {dof, bound}", field=f"problem.constraints[{k}]")
            pairs.append((item['dof'], item['bound']))
        return ConstraintSet(n, pairs)

    def load_history(self, entry: Any, n: int, field: str) -> LoadHistory:
        """Reads {"constant": vector} or {"times_seconds": [...], "values": [[...], ...]}."""
        if not isinstance(entry, dict):
            raise ValidationError("expected an object", field=field)
        if 'constant' in entry:
            return LoadHistory.constant(parse_vector(entry['constant'], f'{field}.constant', n), self.t_end)
        times = parse_vector(entry.get('times_seconds'), f'{field}.times_seconds')
        values = parse_matrix(entry.get('values'), f'{field}.values')
        if values.shape != (len(times), n):
            raise ValidationError(f"expected values of shape ({len(times)}, {n}), got {values.shape}", field=f'{field}.values')
        if times[0] > 0 or times[-1] < self.t_end:
            raise ValidationError(f"table must cover [0, {self.t_end}]", field=f'{field}.times_seconds')
        return LoadHistory(times, values)

    # Mode inputs
    # ---------------------------------------------------------------------------------------------
    def sensitivity_inputs(self, problem: HdviProblem) -> Dict[str, Any]:
        block = _block(self.document, 'sensitivity')
        direction = block.get('direction', 'load')
        if direction == 'load':
            d_load = problem.load
        else:
            d_load = self.load_history(direction, problem.n_dof, 'sensitivity.direction')
        return {
            'direction': d_load,
            'taus': parse_vector(block.get('taus', [1e-1, 1e-2, 1e-3, 1e-4]), 'sensitivity.taus').tolist(),
            'exponent': float(block.get('exponent', 2.0)),
            'hadamard': bool(block.get('hadamard', True)),
        }

    def control_inputs(self, problem: HdviProblem) -> Dict[str, Any]:
        block = _block(self.document, 'control')
        grid = problem.grid
        fixed = block.get('fixed_load')
        fixed_load = None if fixed is None else self.load_history(fixed, problem.n_dof, 'control.fixed_load')
        control_map = ControlMap(problem.n_dof, block['channels'], block.get('map', BODY_AND_TRACTION), fixed_load)
        n_ch = control_map.n_channels
        lower = block.get('lower')
        upper = block.get('upper')
        lower = None if lower is None else parse_vector(lower if isinstance(lower, list) else [lower] * n_ch, 'control.lower', n_ch)
        upper = None if upper is None else parse_vector(upper if isinstance(upper, list) else [upper] * n_ch, 'control.upper', n_ch)
        initial = parse_vector(block.get('initial', [0.0] * n_ch), 'control.initial', n_ch)
        inputs = {
            'map': control_map,
            'alpha': float(block.get('alpha', 1.0)),
            'beta': float(block['beta']),
            'initial': Control.constant(grid, initial, lower, upper),
            'max_iterations': int(block.get('max_iterations', 50)),
            'stationarity_tol': float(block.get('stationarity_tol', 1e-6)),
            'target': None,
            'target_control': None,
        }
        if 'target' in block:
            inputs['target'] = parse_vector(block['target'], 'control.target', problem.n_dof)
        else:
            values = parse_vector(block['target_control'], 'control.target_control', n_ch)
            inputs['target_control'] = Control.constant(grid, values)
        return inputs

    def wellposed_inputs(self) -> Dict[str, Any]:
        block = _block(self.document, 'wellposed')
        recipe = block['recipe']
        inputs = {
            'recipe': recipe,
            'slack': float(block.get('slack', 1e-8)),
            'ks': [int(k) for k in block.get('ks', [1, 10, 100, 1000])],
            'epsilons': parse_vector(block.get('epsilons', [1.0 / k for k in range(1, 101)]), 'wellposed.epsilons').tolist(),
            'count': int(block.get('count', 10)),
        }
        return inputs

    def regression_inputs(self) -> Dict[str, Any]:
        block = _block(self.document, 'regression')
        return {
            'refine': bool(block.get('refine', True)),
            'picard': bool(block.get('picard', True)),
            'max_error': float(block.get('max_error', 1e-3)),
        }

    def summary_rows(self) -> List[List[Any]]:
        """Key facts for console tables."""
        kind = 'rod' if 'rod' in self.problem_block else 'explicit'
        return [
            ['name', self.name],
            ['mode', self.mode],
            ['problem', kind],
            ['t_end_seconds', self.t_end],
            ['steps', self.steps],
            ['quadrature', self.options.quadrature],
            ['tol', self.options.tol],
            ['hash', self.hash[:16]],
        ]

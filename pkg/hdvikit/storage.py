# Imports: Standard Library
import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

# Imports: Third Party
import numpy as np

# Imports: Local
from .errors import ParseError

PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """Converts numpy values, infinities and nested containers into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    if value is None or isinstance(value, str):
        return value
    return repr(value)


class Storage:
    """A utility class for reading scenario documents and writing run artifacts."""

    # Scenario documents
    # ---------------------------------------------------------------------------------------------
    @staticmethod
    def load_scenario(filename: PathLike) -> Dict[str, Any]:
        """
        Reads a scenario document.

        Args:
            filename (str | Path): Path to the JSON scenario.
        Returns:
            dict: The parsed document.
        Raises:
            ParseError: If the file cannot be read or is not valid JSON, with line and column.
        """
        try:
            text = Path(filename).read_text(encoding='utf-8')
        except OSError as e:
            raise ParseError(f"cannot read scenario file {filename}: {e.strerror or e}")
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON in {filename}: {e.msg}", line=e.lineno, column=e.colno)
        if not isinstance(document, dict):
            raise ParseError(f"scenario {filename} must be a JSON object at the top level", line=1, column=1)
        return document

    @staticmethod
    def scenario_hash(document: Dict[str, Any]) -> str:
        """sha256 of the canonical (sorted, compact) JSON form of a scenario."""
        canonical = json.dumps(document, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    # Formatting
    # ---------------------------------------------------------------------------------------------
    @staticmethod
    def format_value(value: Any) -> str:
        """17 significant digits for reals, lower-case words for flags, empty for missing values."""
        if value is None:
            return ''
        if isinstance(value, (bool, np.bool_)):
            return 'true' if value else 'false'
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return format(float(value), '.17g')
        return str(value)

    @staticmethod
    def write_csv(filename: PathLike, headers: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """
        Writes a CSV file with fixed formatting ('.' decimal, '\\n' line endings).

        Args:
            filename (str | Path): Target file.
            headers (sequence): Column names.
            rows (iterable): Row values, formatted with ``format_value``.
        Returns:
            Path: The written file.
        """
        path = Path(filename)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(headers)
            for row in rows:
                writer.writerow([Storage.format_value(v) for v in row])
        return path

    @staticmethod
    def save_json(filename: PathLike, data: Dict[str, Any]) -> Path:
        """Writes a JSON document with sorted keys and a trailing newline."""
        path = Path(filename)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(json.dumps(to_jsonable(data), indent=2, sort_keys=True) + '\n')
        return path

    # Solver artifacts
    # ---------------------------------------------------------------------------------------------
    @staticmethod
    def save_trajectory(trajectory, filename: PathLike) -> Path:
        """
        Writes one row per node: node, t, u_0..u_{n-1} and the VI residual when known.
        """
        n_dof = trajectory.n_dof
        headers = ['node', 't_seconds'] + [f'u_{i}' for i in range(n_dof)]
        residuals = trajectory.meta.get('vi_residuals')
        if residuals is not None:
            headers.append('vi_residual')
        rows = []
        for n, t in enumerate(trajectory.grid.nodes):
            row = [n, float(t)] + [float(v) for v in trajectory.values[n]]
            if residuals is not None:
                row.append(float(residuals[n]))
            rows.append(row)
        return Storage.write_csv(filename, headers, rows)

    @staticmethod
    def save_derivative_trajectory(derivative, filename: PathLike) -> Path:
        """Writes delta u per node with the derivative residual and the cone tag code of each bounded DOF."""
        n_dof = derivative.n_dof
        indices = derivative.cones[0].indices.tolist() if derivative.cones else []
        headers = ['node', 't_seconds'] + [f'du_{i}' for i in range(n_dof)] + ['residual'] + [f'cone_{i}' for i in indices]
        residuals = derivative.meta.get('residuals')
        rows = []
        for n, t in enumerate(derivative.grid.nodes):
            row = [n, float(t)] + [float(v) for v in derivative.values[n]]
            row.append(None if residuals is None else float(residuals[n]))
            row += derivative.cones[n].codes()
            rows.append(row)
        return Storage.write_csv(filename, headers, rows)

    @staticmethod
    def save_series(filename: PathLike, columns: Dict[str, Sequence[Any]]) -> Path:
        """Writes equally long named columns side by side."""
        headers = list(columns)
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns have different lengths {sorted(lengths)}")
        rows = zip(*columns.values()) if columns else []
        return Storage.write_csv(filename, headers, rows)

    @staticmethod
    def save_history(reports, filename: PathLike) -> Path:
        """Writes the cost history of a control run."""
        headers = ['iteration', 'tracking', 'regularization', 'total', 'step']
        rows = [[k, r.tracking, r.regularization, r.total, r.step] for k, r in enumerate(reports)]
        return Storage.write_csv(filename, headers, rows)

    @staticmethod
    def save_control(control, filename: PathLike) -> Path:
        """Writes control samples per node."""
        headers = ['node', 't_seconds'] + [f'g_{j}' for j in range(control.n_channels)]
        rows = [[n, float(t)] + [float(v) for v in control.samples[n]] for n, t in enumerate(control.grid.nodes)]
        return Storage.write_csv(filename, headers, rows)

    @staticmethod
    def save_diagnostic(diagnostic, filename: PathLike) -> Path:
        """Writes a SequenceDiagnostic, one row per member."""
        headers = ['member', 'label', 'feasible', 'p_residual', 'q_residual', 'distance', 'bound', 'q_bound', 'passes']
        rows = [
            [m.index, m.label, m.feasible, m.p_residual, m.q_residual, m.distance, m.p_bound, m.q_bound, m.passes]
            for m in diagnostic.members
        ]
        return Storage.write_csv(filename, headers, rows)

    @staticmethod
    def read_csv(filename: PathLike) -> List[List[str]]:
        """Reads back a CSV written by ``write_csv`` as rows of strings (header first)."""
        with open(filename, 'r', encoding='utf-8', newline='') as f:
            return [line.rstrip('\n').split(',') for line in f if line.strip()]

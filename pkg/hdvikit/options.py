# Imports: Standard Library
from typing import Any, Dict

# Imports: Local
from .errors import ValidationError

QUADRATURE_RULES = ('trapezoid', 'left_rectangle')


class SolverOptions:
    """
    Numeric settings shared by every solver.

    Args:
        tol (float): Target residual / change tolerance. Defaults to 1e-10.
        quadrature (str): Memory quadrature, 'trapezoid' or 'left_rectangle'.
        max_evi_iterations (int): Cap of the projected fixed-point iteration.
        inner_max_iterations (int): Cap of the trapezoid self-term loop.
        inner_tol_factor (float): Self-term loop tolerance as a fraction of tol.
        act_tol (float): Activity threshold, scaled per DOF by (1 + |g_i|).
        mult_tol (float): Multiplier threshold, scaled by (1 + max|zeta|).
        max_sweeps (int): Cap of Picard sweeps.
        safety_factor (float): Multiplies the sampled kernel norm.
        max_halvings (int): Armijo backtracking cap.
        armijo_fraction (float): Armijo slope fraction.
        threads (int): Worker threads for independent solves.
        progress (bool): Show tqdm progress bars.
    """
    _DEFAULTS = {
        'tol': 1e-10,
        'quadrature': 'trapezoid',
        'max_evi_iterations': 10 ** 6,
        'inner_max_iterations': 100,
        'inner_tol_factor': 1e-2,
        'act_tol': 1e-10,
        'mult_tol': 1e-8,
        'max_sweeps': 200,
        'safety_factor': 1.0,
        'max_halvings': 60,
        'armijo_fraction': 1e-4,
        'threads': 1,
        'progress': False,
    }

    def __init__(self, **kwargs: Any):
        unknown = set(kwargs) - set(self._DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown option(s) {sorted(unknown)}", field="options")
        for key, default in self._DEFAULTS.items():
            setattr(self, key, kwargs.get(key, default))
        self._check()

    def _check(self):
        for key in self._DEFAULTS:
            value, default = getattr(self, key), self._DEFAULTS[key]
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise ValidationError(f"expected true or false, got {value!r}", field=f"options.{key}")
            elif isinstance(default, (int, float)):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ValidationError(f"expected a number, got {value!r}", field=f"options.{key}")
        if not self.tol > 0:
            raise ValidationError(f"must be positive, got {self.tol}", field="options.tol")
        if self.quadrature not in QUADRATURE_RULES:
            raise ValidationError(f"must be one of {QUADRATURE_RULES}, got '{self.quadrature}'", field="options.quadrature")
        for key in ('max_evi_iterations', 'inner_max_iterations', 'max_sweeps', 'max_halvings', 'threads'):
            value = getattr(self, key)
            if not float(value).is_integer() or value < 1:
                raise ValidationError(f"must be an integer >= 1, got {value}", field=f"options.{key}")
            setattr(self, key, int(getattr(self, key)))
        for key in ('inner_tol_factor', 'act_tol', 'mult_tol', 'safety_factor', 'armijo_fraction'):
            if not float(getattr(self, key)) > 0:
                raise ValidationError(f"must be positive, got {getattr(self, key)}", field=f"options.{key}")
            setattr(self, key, float(getattr(self, key)))
        if self.safety_factor < 1.0:
            raise ValidationError("must be >= 1 so the sampled kernel norm stays an upper bound", field="options.safety_factor")

    @property
    def inner_tol(self) -> float:
        return self.tol * self.inner_tol_factor

    def override(self, **kwargs: Any) -> 'SolverOptions':
        """Returns a copy with the given (non-None) values replaced."""
        values = self.to_dict()
        values.update({k: v for k, v in kwargs.items() if v is not None})
        return SolverOptions(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in self._DEFAULTS}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> 'SolverOptions':
        return cls(**doc)

    def __repr__(self):
        return f"SolverOptions({self.to_dict()})"

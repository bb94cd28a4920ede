# Imports: Standard Library
from typing import Any, Dict, Optional


class HdviError(Exception):
    """
    Base class for every error raised by hdvikit.

    Each subclass carries a distinct ``exit_code`` used by the command line
    interface, and can render itself as a machine-readable error document.
    """
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """
        Returns the error document written next to failed run outputs.

        Returns:
            dict: error name, message, exit code and any structured details.
        """
        doc = {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        if self.details:
            doc["details"] = {k: _plain(v) for k, v in self.details.items()}
        return doc


def _plain(value: Any) -> Any:
    """Converts numpy scalars and other exotic values to JSON-friendly ones."""
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if hasattr(value, "item"):
        try:
            return value.item()
        except (ValueError, TypeError):
            pass
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


# --- Input errors ---
class ParseError(HdviError, ValueError):
    """The scenario document could not be parsed."""
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None, field: Optional[str] = None):
        super().__init__(message, line=line, column=column, field=field)
        self.line = line
        self.column = column
        self.field = field


class ValidationError(HdviError, ValueError):
    """The scenario parsed but its content is inconsistent."""
    exit_code = 3

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message, field=field)
        self.field = field


class DimensionMismatch(HdviError, ValueError):
    exit_code = 11


class EmptyHistory(HdviError, ValueError):
    exit_code = 12


class DegenerateDenominator(HdviError, ValueError):
    exit_code = 18


# --- Numerical errors ---
class NotSPD(HdviError, ArithmeticError):
    exit_code = 10


class MaxIterations(HdviError, ArithmeticError):
    """An iterative solver hit its iteration cap. ``result`` holds the best iterate when one exists."""
    exit_code = 13

    def __init__(self, message: str, result: Any = None, **details: Any):
        super().__init__(message, **details)
        self.result = result


class NonFiniteIterate(HdviError, ArithmeticError):
    exit_code = 14


class InconsistentMultiplier(HdviError, ArithmeticError):
    exit_code = 15


class StepContractionViolated(HdviError, ArithmeticError):
    exit_code = 16


class MaxSweeps(HdviError, ArithmeticError):
    exit_code = 17


class LineSearchFailed(HdviError, ArithmeticError):
    exit_code = 19

    def __init__(self, message: str, result: Any = None, **details: Any):
        super().__init__(message, **details)
        self.result = result


class BoundViolated(HdviError, ArithmeticError):
    exit_code = 20

    def __init__(self, message: str, member: Optional[int] = None, diagnostic: Any = None, **details: Any):
        super().__init__(message, member=member, **details)
        self.member = member
        self.diagnostic = diagnostic


# --- Anything else ---
class InternalError(HdviError, RuntimeError):
    """An exception from outside the hdvikit error tree, wrapped so runs still report it."""
    exit_code = 21

    @classmethod
    def wrap(cls, error: BaseException) -> "InternalError":
        return cls(f"{type(error).__name__}: {error}", exception=type(error).__name__)


ALL_ERRORS = (
    ParseError, ValidationError, DimensionMismatch, EmptyHistory, DegenerateDenominator,
    NotSPD, MaxIterations, NonFiniteIterate, InconsistentMultiplier,
    StepContractionViolated, MaxSweeps, LineSearchFailed, BoundViolated, InternalError,
)

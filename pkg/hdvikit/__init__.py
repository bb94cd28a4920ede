# hdvikit/__init__.py

from .errors import (HdviError, ParseError, ValidationError, DimensionMismatch, EmptyHistory,
                     DegenerateDenominator, NotSPD, MaxIterations, NonFiniteIterate,
                     InconsistentMultiplier, StepContractionViolated, MaxSweeps,
                     LineSearchFailed, BoundViolated, InternalError)
from .options import SolverOptions
from .algebra import TimeGrid, SPDFactor, VolterraMemory, spd_solve, memory_integral, quadrature_weights
from .model import (DiscreteSpace, ConstraintSet, ComplianceLaw, RelaxationKernel, LoadHistory,
                    HdviProblem, DerivedConstants, derived_constants, project,
                    build_rod_example, rod_exact_solution)
from .evi import EviSolver, EviResult, CriticalCone
from .hdvi import HistorySolver, Trajectory
from .sensitivity import SensitivitySolver, DerivativeTrajectory
from .control import ControlMap, Control, CostReport, ControlProblem, MinimizeResult
from .wellposed import WellPosedness, SequenceDiagnostic, MemberDiagnostic, Infeasible
from .storage import Storage
from .scenario import Scenario
from .runner import Runner, RunManifest
from .logs import setup_logging

__all__ = [
    "HdviError",
    "ParseError",
    "ValidationError",
    "DimensionMismatch",
    "EmptyHistory",
    "DegenerateDenominator",
    "NotSPD",
    "MaxIterations",
    "NonFiniteIterate",
    "InconsistentMultiplier",
    "StepContractionViolated",
    "MaxSweeps",
    "LineSearchFailed",
    "BoundViolated",
    "InternalError",
    "SolverOptions",
    "TimeGrid",
    "SPDFactor",
    "VolterraMemory",
    "spd_solve",
    "memory_integral",
    "quadrature_weights",
    "DiscreteSpace",
    "ConstraintSet",
    "ComplianceLaw",
    "RelaxationKernel",
    "LoadHistory",
    "HdviProblem",
    "DerivedConstants",
    "derived_constants",
    "project",
    "build_rod_example",
    "rod_exact_solution",
    "EviSolver",
    "EviResult",
    "CriticalCone",
    "HistorySolver",
    "Trajectory",
    "SensitivitySolver",
    "DerivativeTrajectory",
    "ControlMap",
    "Control",
    "CostReport",
    "ControlProblem",
    "MinimizeResult",
    "WellPosedness",
    "SequenceDiagnostic",
    "MemberDiagnostic",
    "Infeasible",
    "Storage",
    "Scenario",
    "Runner",
    "RunManifest",
    "setup_logging",
]

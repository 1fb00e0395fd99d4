"""Projection-and-contraction solvers for monotone variational inequalities."""

from .core import (
    IterationRecord,
    SolveReport,
    SolverConfig,
    Status,
    StepState,
    VIProblem,
    residual,
    solve,
)
from .errors import (
    ConfigurationError,
    DegenerateStep,
    InputError,
    NumericalDivergence,
    OracleError,
    StepSizeFailure,
)
from .perturbations import PerturbationSchedule
from .projections import ProjectorSpec, project_generic, project_l1_ball

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DegenerateStep",
    "InputError",
    "IterationRecord",
    "NumericalDivergence",
    "OracleError",
    "PerturbationSchedule",
    "ProjectorSpec",
    "SolveReport",
    "SolverConfig",
    "Status",
    "StepSizeFailure",
    "StepState",
    "VIProblem",
    "project_generic",
    "project_l1_ball",
    "residual",
    "solve",
]

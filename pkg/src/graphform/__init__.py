"""Solver library for graph-form convex problems.

minimize f(y) + g(x) subject to y = A x, with separable f and g given in a
parametric base-function representation.  The solver alternates separable
prox steps with a cached Euclidean projection onto the graph of A, after
diagonally equilibrating the matrix.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateInputError,
    DimensionError,
    GraphFormError,
    NumericError,
    ParameterError,
    ProblemFormatError,
)
from .functions import (
    BaseFunction,
    FunctionTerm,
    SeparableFunction,
    conjugate_base,
    eval_base,
)
from .problem import GraphFormProblem, duality_gap
from .prox import prox_base, prox_separable
from .equilibration import (
    Equilibration,
    EquilibrationReport,
    check_equilibrated,
    equilibrate,
    equilibration_objective,
    rescale_even,
)
from .projection import (
    IndirectResult,
    ProjectorCache,
    build_projector,
    project,
    project_indirect,
)
from .solver import (
    IterationSnapshot,
    Setup,
    SolveResult,
    SolverSettings,
    Status,
    adapt_rho,
    gap_stop,
    prepare,
    recover_duals,
    residual_stop,
    solve,
    unscale,
)
from .generators import FAMILIES, GenSpec, generate

__all__ = [
    "__version__",
    "BaseFunction",
    "FunctionTerm",
    "SeparableFunction",
    "GraphFormProblem",
    "duality_gap",
    "eval_base",
    "conjugate_base",
    "prox_base",
    "prox_separable",
    "Equilibration",
    "EquilibrationReport",
    "equilibrate",
    "rescale_even",
    "check_equilibrated",
    "equilibration_objective",
    "ProjectorCache",
    "IndirectResult",
    "build_projector",
    "project",
    "project_indirect",
    "SolverSettings",
    "SolveResult",
    "Setup",
    "Status",
    "IterationSnapshot",
    "prepare",
    "solve",
    "recover_duals",
    "unscale",
    "residual_stop",
    "gap_stop",
    "adapt_rho",
    "GenSpec",
    "generate",
    "FAMILIES",
    "GraphFormError",
    "DimensionError",
    "ParameterError",
    "DegenerateInputError",
    "NumericError",
    "ProblemFormatError",
]

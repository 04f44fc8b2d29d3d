"""Variational solvers for two weakly coupled logistic elliptic equations.

Finite-difference grids on intervals and rectangles, the energy and its
Nehari machinery, Newton/descent/string/linking critical-point finders and
beta-continuation studies built on them.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    BetaOutOfRange,
    ConfigError,
    CoupledLogisticError,
    DegenerateSign,
    EndpointCollapse,
    GridError,
    HypothesisViolation,
    LambdaBelowPrincipal,
    NoConvergence,
    NotInLMinus,
    NoVectorialSolution,
    PositiveSolutionAnomaly,
    SeedNotInLMinus,
    SingularJacobian,
    SolverError,
)
from .functional import Params, State
from .grid import Grid, build_grid
from .kernels import BACKEND
from .solvers import SolutionRecord, classify, ground_state, linking_search, mountain_pass, newton_refine

__all__ = [
    "BACKEND",
    "BetaOutOfRange",
    "ConfigError",
    "CoupledLogisticError",
    "DegenerateSign",
    "EndpointCollapse",
    "Grid",
    "GridError",
    "HypothesisViolation",
    "LambdaBelowPrincipal",
    "NoConvergence",
    "NoVectorialSolution",
    "NotInLMinus",
    "Params",
    "PositiveSolutionAnomaly",
    "SeedNotInLMinus",
    "SingularJacobian",
    "SolutionRecord",
    "SolverError",
    "State",
    "build_grid",
    "classify",
    "ground_state",
    "linking_search",
    "mountain_pass",
    "newton_refine",
]

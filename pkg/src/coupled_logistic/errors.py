"""Exception hierarchy.

Solver failures carry whatever diagnostic the caller needs to decide what
to do next (final residual, endpoint reached, smallest singular value).
"""

from __future__ import annotations


class CoupledLogisticError(Exception):
    """Base class for all package errors."""


class GridError(CoupledLogisticError, ValueError):
    pass


class HypothesisViolation(CoupledLogisticError, ValueError):
    """Standing assumption lambda2 >= lambda1 > lambda_1(Omega) fails."""


class BetaOutOfRange(CoupledLogisticError, ValueError):
    pass


class NotInLMinus(CoupledLogisticError, ValueError):
    """The quadratic form is not negative on the given state."""


class SeedNotInLMinus(NotInLMinus):
    pass


class LambdaBelowPrincipal(CoupledLogisticError, ValueError):
    pass


class SolverError(CoupledLogisticError, RuntimeError):
    """A numerical procedure failed; ``residual`` is its last residual norm."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NoConvergence(SolverError):
    pass


class SingularJacobian(SolverError):
    def __init__(self, message: str, sigma_min: float | None = None, residual: float | None = None):
        super().__init__(message, residual)
        self.sigma_min = sigma_min


class DegenerateSign(SolverError):
    pass


class EndpointCollapse(SolverError):
    def __init__(self, message: str, endpoint: str, residual: float | None = None):
        super().__init__(message, residual)
        self.endpoint = endpoint


class NoVectorialSolution(SolverError):
    pass


class PositiveSolutionAnomaly(SolverError):
    """A positive-energy critical point at beta >= 1 came out componentwise positive."""


class ConfigError(CoupledLogisticError, ValueError):
    pass

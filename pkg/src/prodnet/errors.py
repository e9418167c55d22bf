"""Exception hierarchy shared by every prodnet module."""

from __future__ import annotations


class ProdnetError(Exception):
    """Base class for all library errors."""


class InvalidSizeError(ProdnetError, ValueError):
    pass


class GraphError(ProdnetError, ValueError):
    """Malformed graph: self-loops, bad weights, unknown endpoints."""


class DegenerateDistributionError(ProdnetError, ValueError):
    """A probability distribution has no mass to normalize."""


class EmptySupportError(DegenerateDistributionError):
    pass


class ShapeError(ProdnetError, ValueError):
    pass


class DomainError(ProdnetError, ValueError):
    """An argument lies outside the domain of the formula."""


class InvalidRatesError(DomainError):
    pass


class DivergenceError(ProdnetError, ArithmeticError):
    """Spectral radius >= 1, so the Leontief series does not converge."""

    def __init__(self, message: str, spectral_radius: float):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class NonInvertibleError(ProdnetError, ArithmeticError):
    pass


class NonConvergenceError(ProdnetError, ArithmeticError):
    def __init__(self, message: str, residual: float, terms: int):
        super().__init__(message)
        self.residual = residual
        self.terms = terms


class SingularParametersError(ProdnetError, ValueError):
    pass


class FitError(ProdnetError, ValueError):
    pass


class ConfigurationError(ProdnetError, ValueError):
    pass


class EarlyTerminationError(ProdnetError, RuntimeError):
    """The evolving graph ran out of nodes; ``trajectory`` holds what was recorded."""

    def __init__(self, message: str, trajectory):
        super().__init__(message)
        self.trajectory = trajectory

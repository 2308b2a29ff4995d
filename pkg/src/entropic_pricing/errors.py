"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GridMismatchError(ValueError):
    """Two discretized objects do not share the same grid."""


class SupportError(ValueError):
    """A density has mass where the reference density vanishes."""


class InfeasibleConstraintsError(ValueError):
    """Moment targets that no probability density can satisfy."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CoefficientError(ValueError):
    """A drift/volatility field is invalid somewhere on the grid."""


class BoundaryTruncationError(RuntimeError):
    """Probability mass reached the edge of a truncated domain."""


class TruncationError(RuntimeError):
    """An integration window cut off non-negligible mass."""

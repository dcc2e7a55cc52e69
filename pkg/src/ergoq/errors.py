"""Exception hierarchy.

Validation problems (bad arguments, caps, domains) subclass ``ValueError``;
numerical failures subclass ``ArithmeticError`` so callers such as the CLI can
tell the two apart.
"""

from __future__ import annotations


class ErgoqError(Exception):
    """Base class for all library errors."""


class ValidationError(ErgoqError, ValueError):
    """Invalid input, configuration, or parameter domain."""


class DimensionError(ValidationError):
    """Matrix or Kraus dimensions do not agree."""


class CapExceededError(ValidationError):
    """A configured size cap (Kraus count, support length, memory) was exceeded."""


class DomainError(ValidationError):
    """Parameters are outside the mathematical domain of an operation."""


class NumericalError(ErgoqError, ArithmeticError):
    """A computation failed for numerical reasons."""


class DegenerateImageError(NumericalError):
    """The image of a state has (numerically) zero trace."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class SingularInputError(NumericalError):
    """A matrix required to be positive definite is singular."""


class ConvergenceError(NumericalError):
    """An iteration did not converge within its budget."""

    def __init__(self, message: str, residual: float | None = None, iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations

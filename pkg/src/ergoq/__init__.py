"""Ergodic sequences of quantum channels, Haar random channels and matrix product states."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapExceededError,
    ConvergenceError,
    DegenerateImageError,
    DimensionError,
    DomainError,
    ErgoqError,
    NumericalError,
    SingularInputError,
    ValidationError,
)
from .qcore import CPMap  # noqa: E402

__all__ = [
    "CPMap",
    "CapExceededError",
    "ConvergenceError",
    "DegenerateImageError",
    "DimensionError",
    "DomainError",
    "ErgoqError",
    "NumericalError",
    "SingularInputError",
    "ValidationError",
    "__version__",
]

"""Exception hierarchy shared by all matmoment modules."""

from __future__ import annotations


class MatMomentError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(MatMomentError, ValueError):
    """Malformed data: wrong shapes, non-finite entries, degree bookkeeping."""


class PreconditionError(MatMomentError):
    """A documented precondition of an operation does not hold."""


class NumericalFailureError(MatMomentError):
    """A computation could not be completed to the requested accuracy.

    Carries the offending residual so callers can report it instead of
    silently accepting a wrong answer.
    """

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class SearchFailureError(MatMomentError):
    """An iterative search exhausted its budget without a verified result."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (final residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual

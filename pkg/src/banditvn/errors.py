"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BanditVnError(Exception):
    """Base class for all errors raised by banditvn."""


class ConfigurationError(BanditVnError):
    """Invalid configuration value (bad delta, lambda0 below its bound, ...)."""


class PreconditionError(BanditVnError):
    """An operation was called with inputs outside its contract."""


class NotPositiveDefiniteError(BanditVnError):
    """A factorization hit a non-positive pivot.

    Usually signals a misconfigured regularizer upstream.
    """


class EigenConvergenceError(BanditVnError):
    """The Jacobi eigensolver did not converge within its sweep cap."""

    def __init__(self, message: str, off_diagonal_residual: float):
        super().__init__(message)
        self.off_diagonal_residual = off_diagonal_residual


class InvariantError(BanditVnError):
    """Internal state violated an invariant (e.g. a stale eigendecomposition)."""


class FitError(BanditVnError):
    """Curve fitting was asked to do something impossible on the given rows."""

    def __init__(self, message: str, offending_rows: list[int] | None = None):
        super().__init__(message)
        self.offending_rows = offending_rows or []

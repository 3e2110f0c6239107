"""Exception types raised across the package."""


class UnigapError(Exception):
    """Base class for all package errors."""


class DomainError(UnigapError, ValueError):
    """An argument lies outside the domain of the function."""


class EnsembleMismatchError(UnigapError, TypeError):
    """An operation received data built on the wrong weight."""


class IllConditionedError(UnigapError, ArithmeticError):
    """Moment-matrix factorization failed even after precision escalation.

    ``index`` is the pivot that came out non-positive.
    """

    def __init__(self, message, index=None, digits=None):
        super().__init__(message)
        self.index = index
        self.digits = digits


class ConvergenceError(UnigapError, ArithmeticError):
    """A quadrature or extrapolation did not settle to the requested tolerance."""


class InvalidPointError(UnigapError, ArithmeticError):
    """A PDE residual could not be formed (negative discriminant)."""

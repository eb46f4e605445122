"""Exception types raised across the package."""


class ExchMarkovError(Exception):
    """Base class for all package errors."""


class MalformedInputError(ExchMarkovError, ValueError):
    """Input violates arity, range, or format constraints."""


class CapacityError(ExchMarkovError):
    """Requested size exceeds an enumeration or kernel bound."""


class DomainError(ExchMarkovError, ValueError):
    """Input lies outside the class a kernel or checker is defined on."""


class NotFoundError(ExchMarkovError, LookupError):
    """A required embedding or object does not exist within the truncation."""


class UnsupportedClassError(ExchMarkovError, KeyError):
    """Unknown class identifier or an operation the class does not support."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ValidationError(ExchMarkovError, ValueError):
    """Parameters fail validation (rates, simplex points, locality)."""


class StepError(ExchMarkovError):
    """A kernel application failed inside a chain; carries the step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause

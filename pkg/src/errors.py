"""
Exception hierarchy for the accelerated-oracles package.

Every error raised on purpose by the library derives from AccelError, so
callers (the CLI in particular) can separate library failures from bugs.
"""

from typing import Optional


class AccelError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(AccelError, ValueError):
    """Vectors (or a vector and a problem) disagree on dimension."""

    def __init__(self, expected: int, got: int, what: str = "vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} dimension mismatch: expected {expected}, got {got}")


class ConfigurationError(AccelError, ValueError):
    """Invalid parameters: λ outside (0, 1], L ≤ μ, bad codec settings, bad config files."""


class LibsvmParseError(AccelError, ValueError):
    """Malformed LIBSVM input."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class NumericalError(AccelError, ArithmeticError):
    """A solver produced non-finite values."""

    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        prefix = f"iteration {iteration}: " if iteration is not None else ""
        super().__init__(prefix + message)


class OracleError(AccelError, RuntimeError):
    """An oracle was used outside its contract (e.g. SAGA memory not initialized)."""


class ReferenceNotConvergedError(AccelError, RuntimeError):
    """The long exact-oracle reference run did not settle within its cap."""

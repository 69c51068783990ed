"""
Exception types raised by the gmoea library.

Every class also derives from the closest builtin so callers may catch
either the library type or the generic one.
"""


class GmoeaError(Exception):
    """Base class for all library errors."""


class DimensionError(GmoeaError, ValueError):
    """Vector or matrix shapes do not agree."""


class RangeError(GmoeaError, ValueError):
    """A value lies outside its admissible range."""


class PreconditionError(GmoeaError, ValueError):
    """An operation was called with arguments violating its contract."""


class StateError(GmoeaError, RuntimeError):
    """An object is not in the state an operation requires."""


class BudgetError(GmoeaError, RuntimeError):
    """Not enough function evaluations left."""

    def __init__(self, requested, remaining):
        self.requested = requested
        self.remaining = remaining
        super().__init__(
            f"FE budget exhausted: {requested} evaluations requested, "
            f"{remaining} remaining (short by {requested - remaining})"
        )


class DegeneracyError(GmoeaError, ArithmeticError):
    """A matrix could not be factorised even after jitter."""


class UnsupportedError(GmoeaError, NotImplementedError):
    """The requested variant is not implemented."""


class UnknownProblemError(GmoeaError, KeyError):
    """No benchmark problem with the given name."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown problem"


class ComparisonError(GmoeaError, ValueError):
    """Two record sets cannot be compared."""


class ConfigError(GmoeaError, ValueError):
    """A configuration file or value is invalid."""

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")

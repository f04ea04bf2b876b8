"""Exception taxonomy shared across the package.

Usage errors (bad arguments, malformed files) and data/domain errors
(values outside a family's support, nonpositive weights) are kept as
distinct subclasses so the command line can map them to exit codes.
"""


class NearisoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NearisoError, ValueError):
    """A parameter lies outside the natural or mean domain of a family."""


class SupportError(NearisoError, ValueError):
    """An observation lies outside the support of its distribution."""


class EmptyInputError(NearisoError, ValueError):
    """An operation received an empty series."""


class NonpositiveWeightError(NearisoError, ValueError):
    """Weights must be strictly positive."""


class InvalidBoundsError(NearisoError, ValueError):
    """Lower bound exceeds upper bound, or bounds leave the parameter domain."""


class ParseError(NearisoError, ValueError):
    """A data file could not be parsed.

    Attributes
    ----------
    line : int or None
        1-based line number of the offending record, when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SchemaError(NearisoError, ValueError):
    """A data file parsed but violates the expected schema."""


class IoError(NearisoError, OSError):
    """Failure writing or reading a report stream."""


class NonConvergenceError(NearisoError, RuntimeError):
    """The reference solver did not reach its accuracy target.

    Carries the best iterate found so callers can inspect it; tests must
    treat this as a failure rather than silently accepting the value.

    Attributes
    ----------
    best_theta : ndarray
        Best iterate found before giving up.
    best_value : float
        Objective value at ``best_theta``.
    """

    def __init__(self, message, best_theta=None, best_value=None):
        super().__init__(message)
        self.best_theta = best_theta
        self.best_value = best_value

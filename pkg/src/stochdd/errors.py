"""Exception hierarchy.

Errors that signal a numerical failure (as opposed to bad input) derive from
:class:`NumericalError`; the CLI maps those to exit code 3.
"""


class StochDDError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(StochDDError):
    pass


class NotHermitian(StochDDError, ValueError):
    pass


class NotUnitary(StochDDError, ValueError):
    pass


class NoConvergence(NumericalError):
    pass


class MatrixOverflow(NumericalError, OverflowError):
    pass


class ClusterAmbiguity(NumericalError):
    """Two eigenphase gaps sit inside the guard band (tol, 10*tol)."""


class DimensionMismatch(StochDDError, ValueError):
    pass


class DimensionTooLarge(StochDDError, ValueError):
    pass


class EmptyList(StochDDError, ValueError):
    pass


class EmptyEnsemble(StochDDError, ValueError):
    pass


class PhiOutOfRange(StochDDError, ValueError):
    pass


class NegativeTime(StochDDError, ValueError):
    pass


class NotCycleMultiple(StochDDError, ValueError):
    pass


class ConfigError(StochDDError, ValueError):
    """Invalid or incomplete experiment configuration."""

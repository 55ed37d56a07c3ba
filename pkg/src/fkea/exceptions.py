"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`FKEAError`
and carries the process exit code the CLI maps it to.
"""


class FKEAError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(FKEAError, ValueError):
    """Invalid argument values, shapes or dimensions."""

    exit_code = 3


class DataError(InputError):
    """Embedding payload contains non-finite values."""


class FormatError(FKEAError):
    """Malformed embedding file (bad header, truncation, bad CSV)."""

    exit_code = 3


class GenerationError(FKEAError):
    """Synthetic mixture generation could not satisfy its constraints."""

    exit_code = 3


class BasisMismatchError(FKEAError, ValueError):
    """Accumulators or bases built from different Fourier bases were combined."""

    exit_code = 3


class EmptyAccumulatorError(FKEAError):
    """A covariance was read before any sample was accumulated."""

    exit_code = 3


class NumericError(FKEAError, ArithmeticError):
    """Eigensolver failure or a spectrum that is too far from PSD."""

    exit_code = 4


class CapacityError(FKEAError):
    """An exact O(n^2) path was requested above the configured sample cap."""

    exit_code = 5


class NumericWarning(UserWarning):
    """Non-fatal numeric anomaly, e.g. noticeable negative eigenvalue mass."""

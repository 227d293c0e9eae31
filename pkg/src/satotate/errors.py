"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each class carries the category it
belongs to rather than relying on message text.
"""


class SatoTateError(Exception):
    """Base class for all errors raised by the package."""

    exit_code = 2


class InvalidInputError(SatoTateError, ValueError):
    """An argument violates an operation's precondition."""


class NotFoundError(SatoTateError, KeyError):
    """A named catalog entry does not exist."""

    def __str__(self):
        return Exception.__str__(self)


class UnsupportedError(SatoTateError):
    """The operation is not defined for this kind of input."""


class DescriptorInvalidError(SatoTateError):
    """A group descriptor fails a structural check (e.g. Hodge circles)."""


class BelowThresholdError(SatoTateError):
    """Smoothing parameters violate 2*Delta <= |I|; x must be raised."""


class NumericFailureError(SatoTateError):
    """A numerical routine did not converge within its budget."""

    exit_code = 3


class BadReductionError(SatoTateError):
    """The curve has bad reduction at the requested prime."""

    def __init__(self, p, message=None):
        self.p = p
        super().__init__(message or f"bad reduction at p={p}")


class DataInvalidError(SatoTateError):
    """Trace data violates an invariant (Hasse bound, unit-circle roots)."""


class TraceParseError(DataInvalidError):
    """A trace file line could not be parsed."""

    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class InsufficientDataError(SatoTateError):
    """The requested range lies beyond the available trace data."""

    exit_code = 4

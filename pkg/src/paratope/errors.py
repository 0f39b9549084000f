"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies.
"""


class ParatopeError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ParatopeError):
    """Malformed or inconsistent input data (exit code 2 in the CLI)."""


class ParseError(DataError):
    """A dataset record could not be parsed; names the record and field."""


class ValidationError(DataError):
    """A parsed value violates a documented invariant."""


class WeightsFormatError(DataError):
    """A weights container has an unknown magic, version, or model kind."""


class NumericError(ParatopeError):
    """A non-finite value (NaN/Inf) was produced (exit code 3 in the CLI)."""

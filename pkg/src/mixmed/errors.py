"""Exception types shared across the toolkit.

The hierarchy mirrors the CLI exit-code contract: configuration problems
(exit 2), data problems (exit 3), numerical failures after mitigation
(exit 4). Plain ``ValueError`` is used for ordinary argument-domain
violations.
"""


class MixmedError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MixmedError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class DataError(MixmedError):
    """Problem with input data (CLI exit code 3)."""


class SchemaError(DataError):
    """Declared column roles reference names absent from the file header."""


class ParseError(DataError):
    """Non-numeric cell in a numeric column."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class InsufficientDataError(DataError):
    """Too few rows remain for the requested operation."""


class DegenerateColumnError(DataError):
    """A column has zero variance where positive variance is required."""


class DegenerateScoreError(DataError):
    """A derived score (e.g. ERS) has zero variance on the analysis split."""


class CollinearityError(DataError):
    """Design matrix is rank deficient; message names a dependent column."""


class NumericalError(MixmedError):
    """Numerical failure persisting after mitigation (CLI exit code 4)."""


class ConvergenceError(NumericalError):
    """Iterative solver exhausted its iteration budget before converging."""

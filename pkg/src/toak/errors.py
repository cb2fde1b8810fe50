"""Exception hierarchy shared across the package.

CLI exit codes map onto these classes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class ToakError(Exception):
    """Base class for all package errors."""


class ConfigError(ToakError):
    """Invalid experiment configuration (bad value, missing file reference)."""


class DataError(ToakError):
    """Malformed or inconsistent input data."""


class GraphFormatError(DataError):
    """Unparseable edge-list / attribute / anchor file; carries line context."""

    def __init__(self, message, path=None, line_no=None):
        if path is not None and line_no is not None:
            message = f"{path}:{line_no}: {message}"
        super().__init__(message)
        self.path = path
        self.line_no = line_no


class DomainError(DataError, ValueError):
    """An operation precondition was violated (out-of-range node, non-edge, ...)."""


class NumericError(ToakError):
    """Numerical failure (divergence, non-finite values)."""


class TrainingError(NumericError):
    """Embedding training produced a non-finite loss; carries the epoch index."""

    def __init__(self, message, epoch=None):
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
        self.epoch = epoch

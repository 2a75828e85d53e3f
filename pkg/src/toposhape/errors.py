"""Exception types shared across the package and mapped to CLI exit codes."""


class ToposhapeError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ToposhapeError):
    """Invalid configuration file, key, or value.  CLI exit code 2."""


class DataError(ToposhapeError):
    """Malformed or inconsistent input data.  CLI exit code 3."""


class StlParseError(DataError):
    """STL file could not be parsed.  Carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConvergenceError(ToposhapeError):
    """An iterative numerical routine failed to converge.  CLI exit code 4."""

"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
BackendError -> 3, DataError -> 4.
"""


class IrofError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(IrofError):
    """Invalid configuration, flags, or parameter combinations."""


class DataError(IrofError):
    """Unreadable, malformed, or inconsistent input data."""


class BackendError(IrofError):
    """Model backend could not produce scores (transport or model failure)."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class CurveError(IrofError):
    """A degradation curve could not be normalized (frame-0 score unusable)."""

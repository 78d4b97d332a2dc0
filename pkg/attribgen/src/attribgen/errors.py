class GenError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigError(GenError):
    """Unusable options: bad flag values, missing model, unknown method."""


class DataError(GenError):
    """Unreadable or inconsistent input files."""


class ModelError(GenError):
    """The loaded model cannot support the requested operation."""

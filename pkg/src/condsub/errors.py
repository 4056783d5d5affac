"""Exception hierarchy shared across the package."""


class CondsubError(Exception):
    """Base class for all package errors."""


class LoadError(CondsubError):
    """Raised when a CSV or schema file cannot be loaded."""


class DataError(CondsubError):
    """Raised for invalid dataset operations (bad split fractions, etc.)."""


class ModelError(CondsubError):
    """Raised when a model cannot be fitted or queried."""


class ModelBridgeError(CondsubError):
    """Raised when the external-model subprocess misbehaves."""


class PartitionError(CondsubError):
    """Raised when a subgroup partition cannot be fitted or applied."""


class UnseenLevelError(PartitionError):
    """A categorical level not present at fit time was encountered."""


class ConfigError(CondsubError):
    """Raised for invalid run configuration files or values."""

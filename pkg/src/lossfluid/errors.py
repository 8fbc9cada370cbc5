class LossFluidError(Exception):
    """Base class for errors raised by this package."""


class DomainError(LossFluidError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedConfigError(LossFluidError):
    """The operation is not defined for this model configuration."""


class ConfigError(LossFluidError, ValueError):
    """A run configuration failed to parse or validate."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)

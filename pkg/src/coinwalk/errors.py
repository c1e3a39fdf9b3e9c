"""Exception types shared across the package."""


class DegenerateBandsError(ValueError):
    """The symbol's two bands cannot be separated into smooth sections."""


class FieldMismatchError(ValueError):
    """A derived object was computed for a different coin field."""


class NumericalFilterError(RuntimeError):
    """A numerical self-check (unitarity, stability, mass) failed."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""

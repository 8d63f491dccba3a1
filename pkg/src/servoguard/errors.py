"""Exception types shared across the package."""


class ServoguardError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(ServoguardError):
    """An argument or configuration value is out of its documented range."""


class DataFormatError(ServoguardError):
    """An input file does not match the expected on-disk schema."""

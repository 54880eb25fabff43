"""Exception types shared across the package."""


class FgdetectError(Exception):
    """Base class for package errors."""


class ConfigurationError(FgdetectError):
    """Invalid name, option, or mismatched configuration."""


class CapabilityError(FgdetectError):
    """Instance too large for an exact reference method."""


class TrainingError(FgdetectError):
    """Non-finite loss or diverged optimization."""


class ParamsIOError(FgdetectError):
    """Unreadable, truncated, or mismatched parameter file."""

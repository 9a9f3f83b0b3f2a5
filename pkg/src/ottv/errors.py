"""Exception hierarchy shared across the package."""


class OttvError(Exception):
    """Base class for all engine errors."""


class ValidationError(OttvError):
    """Invalid parameter or malformed in-memory input."""


class ContainerError(OttvError):
    """Unreadable, truncated, or inconsistent container file."""


class NumericalError(OttvError):
    """A solver produced non-finite values and cannot continue."""

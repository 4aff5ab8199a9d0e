"""Exception types shared across the package."""


class QdCavityError(Exception):
    """Base class for all package errors."""


class ConfigError(QdCavityError):
    """Raised for malformed or inconsistent scenario configuration."""


class NumericalError(QdCavityError):
    """Raised when an integration or linear solve leaves the trusted regime."""


class SteadyStateError(NumericalError):
    """Raised when the steady-state solve fails or is not unique."""

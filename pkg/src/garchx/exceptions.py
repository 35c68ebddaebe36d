"""Exception and warning types shared across the package."""


class GarchXError(Exception):
    """Base class for all package-specific errors."""


class NumericalError(GarchXError):
    """Raised when a computation fails numerically (overflow, singular matrix)."""


class DataError(GarchXError):
    """Raised when input data violate the model's requirements."""


class StationarityWarning(UserWarning):
    """Emitted when a parameter vector has persistence sum(alpha)+sum(beta) >= 1."""


class DegenerateModelWarning(UserWarning):
    """Emitted when a model has no ARCH, GARCH, or covariate terms (omega only)."""


class ConvergenceWarning(UserWarning):
    """Emitted when an optimizer or matrix inversion needed a fallback."""

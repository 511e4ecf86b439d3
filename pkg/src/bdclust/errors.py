"""Exception types shared across the package."""


class BdclustError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(BdclustError, ValueError):
    """Input data violates a structural contract (shape, symmetry, sign, ...)."""


class ParameterError(BdclustError, ValueError):
    """A parameter is outside its admissible range."""


class DegenerateDataError(ValidationError):
    """Data configuration makes the requested computation ill-posed."""


class NumericalError(BdclustError, RuntimeError):
    """A numerical routine failed to produce a usable result."""

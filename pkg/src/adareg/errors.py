"""Exception types shared across the package."""


class AdaRegError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AdaRegError):
    """Malformed input: wrong shape, non-finite entries, broken invariant."""


class ConfigError(ValidationError):
    """Inconsistent algorithm configuration."""


class DomainError(AdaRegError):
    """A value lies outside the mathematical domain of an operation."""


class SingularMatrixError(DomainError):
    """A matrix that must be positive definite has a nonpositive eigenvalue."""


class ConvergenceError(AdaRegError):
    """An iterative solver exhausted its budget before reaching tolerance."""

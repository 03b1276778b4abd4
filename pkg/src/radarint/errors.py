"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class ValidationError(ValueError):
    """A configuration or sweep description is invalid.

    ``keys`` lists the offending field names.
    """

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class NumericalError(ArithmeticError):
    """Quadrature or root finding did not reach the requested tolerance."""

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class ResourceError(RuntimeError):
    """A simulation request exceeds the configured point budget."""

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DimensionError(ValueError):
    """A matrix or state has an incompatible shape."""


class CircuitValidationError(ValueError):
    """A circuit description is malformed or references invalid modes/parameters."""

"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input object violates a structural requirement (bad POVM, non-unitary, ...)."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain of the requested functional."""


class ParseError(ValueError):
    """A data file does not conform to its schema."""


class ResourceLimitError(RuntimeError):
    """An exact enumeration was requested beyond desk scale."""

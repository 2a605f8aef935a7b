"""Exception hierarchy shared by all modules."""


class MultibellError(Exception):
    """Base class for package errors."""


class ValidationError(MultibellError, ValueError):
    """An input object violates its invariants (non-Hermitian state, non-unit vector, ...)."""


class ArityError(ValidationError):
    """Wrong number of parties or wrong settings shape for the requested operation."""


class DomainError(ValidationError):
    """A scalar parameter lies outside its admissible range."""


class EnumerationSizeError(MultibellError):
    """Exhaustive enumeration would exceed the configured size limit."""


class SpecParseError(ValidationError):
    """A textual state specification could not be parsed."""

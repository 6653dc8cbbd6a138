"""Exception hierarchy.

Configuration/precondition problems derive from :class:`ValidationError`
(CLI exit status 2); numerical/runtime failures derive from
:class:`NumericalError` (CLI exit status 1).
"""


class BarronFuncError(Exception):
    """Base class for all package errors."""


class ValidationError(BarronFuncError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(BarronFuncError, RuntimeError):
    """A computation produced an invalid or inconsistent result."""


class SupportOutOfRangeError(ValidationError, IndexError):
    """A multi-index references a coefficient absent from the vector."""


class InvalidDomainError(ValidationError):
    pass


class InsufficientResolutionError(ValidationError):
    pass


class StructureError(ValidationError):
    """The functional has no (or the wrong) declared decomposition."""


class DecayTooSlowError(ValidationError):
    pass


class LengthMismatchError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class OutOfGridError(ValidationError):
    pass


class ZeroModePresentError(ValidationError):
    pass


class DivergenceError(NumericalError):
    """Training loss became non-finite."""

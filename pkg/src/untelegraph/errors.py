"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class CapacityError(ParameterError):
    """A requested dense object would exceed the supported size."""


class UnsupportedAttackError(ParameterError):
    """The attack is not defined for the given scheme."""


class PreconditionError(ParameterError):
    """A hypothesis required by a certification check does not hold."""

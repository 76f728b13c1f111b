"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """A documented precondition of an operation is not met."""


class InternalConsistencyError(RuntimeError):
    """A runtime invariant failed; signals a kernel bug, not a user error.

    Raised e.g. when a refinement trace increases by more than the
    quadrature-error slack allows.
    """


class SetSpecError(DomainError):
    """A set-specification file is malformed."""

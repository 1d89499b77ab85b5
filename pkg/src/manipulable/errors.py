class ValidationError(ValueError):
    """Input outside the model's domain (bad parameters, sample sizes, targets)."""


class NotAFixedPointError(ValidationError):
    pass


class TargetUnreachableError(ValidationError):
    """Attenuation can only shrink a slope toward zero, never past it or above it."""


class DegenerateRegressorError(ValidationError):
    pass


class SolverError(RuntimeError):
    """An internal invariant of a solver did not hold.

    For valid inputs this should never be raised; seeing it means a bug.
    """

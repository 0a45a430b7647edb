"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class NumericalFailureError(RuntimeError):
    """An iterative routine diverged or failed to converge."""


class DegenerateSubspaceError(NumericalFailureError):
    """The dictionary restricted to the sampled nodes is identically zero."""

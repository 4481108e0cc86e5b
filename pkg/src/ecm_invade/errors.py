"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid run configuration or invalid constructor arguments."""


class ShapeError(ValueError):
    """Field array shape does not match the grid it claims to live on."""


class BoundsError(ValueError):
    """A field violates the box constraints required by the caller."""


class StabilityError(RuntimeError):
    """The explicit integration left the admissible set or the step size underflowed."""


class ConvergenceError(RuntimeError):
    """An iterative solve did not reach its tolerance within the iteration cap."""


class LinearSolveError(ConvergenceError):
    """Conjugate gradient solve did not converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class FrontNotFoundError(RuntimeError):
    """No threshold crossing present in the profile."""


class InsufficientDataError(ValueError):
    """Not enough samples for the requested fit."""

"""Exception types raised across the package."""


class ResolutionError(ValueError):
    """The grid cannot resolve a dilated mollifier (too few cells, or support outside the box)."""


class NumericalBlowupError(FloatingPointError):
    """A NaN or Inf appeared in the evolving state."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite state at step {step_index}")


class PreconditionError(ValueError):
    """An experiment was requested outside the range where its estimate applies."""


class ConfigError(ValueError):
    """Invalid run configuration (syntax or semantics)."""

"""Exception types shared across the package."""


class CapExceededError(ValueError):
    """An input is larger than an exhaustive algorithm is allowed to handle."""


class ConvergenceError(RuntimeError):
    """An iterative float routine failed to converge."""

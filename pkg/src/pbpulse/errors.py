"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised for malformed arguments (parity, ranges, non-finite values)."""


class ConsistencyError(RuntimeError):
    """Raised when a computed quantity violates an internal invariant."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance.

    The best iterate found so far is attached so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best

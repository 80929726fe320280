"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter fell outside the natural parameter space, or outside
    the domain where a generator's derivatives exist."""


class NonConvergenceError(RuntimeError):
    """A truncated series or exhaustive summation failed to converge.

    Carries the partial trace (when available) on the ``trace`` attribute
    for diagnosis.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace

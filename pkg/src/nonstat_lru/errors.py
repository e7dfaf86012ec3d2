"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class RegimeError(ValueError):
    """A regime approximation was requested where it does not apply."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    ``partial`` carries the best estimate available when the routine gave up
    and ``error`` the corresponding error estimate.
    """

    def __init__(self, message, partial=None, error=None):
        super().__init__(message)
        self.partial = partial
        self.error = error


class DegenerateResultError(RuntimeError):
    """A simulation produced no measurable requests."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` locates the offending key."""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}" if path else reason)
        self.path = path
        self.reason = reason

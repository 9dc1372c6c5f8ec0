"""Shared exception types."""


class ConfigError(ValueError):
    """A configuration value violates a documented invariant."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or certify its result."""


class Infeasible(RuntimeError):
    """A problem instance admits no feasible solution.

    ``detail`` optionally carries structured information (e.g. the list of
    (user, fov) pairs that cannot be served).
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class EnumerationTooLarge(ValueError):
    """A brute-force enumeration was requested beyond its size guard."""

"""Exception hierarchy shared by every carpnet module."""


class CarpError(Exception):
    """Base class for all carpnet errors."""


class ValidationError(CarpError, ValueError):
    """An input violates a documented contract (bad range, bad shape, bad file)."""


class ConvergenceError(CarpError, RuntimeError):
    """An iterative solve failed to converge where a converged result is required."""

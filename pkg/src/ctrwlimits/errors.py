"""Exception types shared across the package."""


class CtrwError(Exception):
    """Base class for all package errors."""


class ParameterError(CtrwError, ValueError):
    """Invalid parameters or inputs."""


class RangeError(CtrwError, IndexError):
    """A query fell outside the simulated horizon."""


class StructuralError(CtrwError):
    """A linear-algebra problem is singular on the relevant subspace."""


class NumericalError(CtrwError, ArithmeticError):
    """Quadrature or iteration failed to reach the requested accuracy."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class AccuracyError(NumericalError):
    """A refinement budget ran out before the target tolerance was met."""

    def __init__(self, message, achieved=None, diagnostic=None):
        super().__init__(message, diagnostic)
        self.achieved = achieved

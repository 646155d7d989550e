"""Exception hierarchy shared by all modules."""


class MbasError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(MbasError, ValueError):
    """Operand shapes do not match."""


class ParameterError(MbasError, ValueError):
    """A scalar parameter is outside its admissible range."""


class NotPositiveDefiniteError(MbasError, ValueError):
    """A factorization met a non-positive pivot."""


class ConvergenceError(MbasError, RuntimeError):
    """An iterative kernel hit its iteration cap.

    ``residual`` holds the last relative residual (or eigen-residual) seen.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations

"""Exception types raised across the package."""


class HFujitaError(Exception):
    """Base class for library errors."""


class ParameterError(HFujitaError, ValueError):
    pass


class DimensionError(HFujitaError, ValueError):
    pass


class QuadratureError(HFujitaError):
    """Quadrature failed to reach the requested tolerance.

    Carries the partial value and the error estimate so callers can decide
    whether to accept it.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class StabilityError(HFujitaError):
    """Explicit time stepping grew the sup-norm beyond the allowed margin."""


class ConstraintError(HFujitaError, ValueError):
    """A modelling precondition (for example the decay condition on delta) is violated."""


class BackendError(HFujitaError):
    pass

"""Exception hierarchy shared by the holecov modules."""


class HolecovError(Exception):
    """Base class for all errors raised by holecov."""


class DomainError(HolecovError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class ConvergenceError(HolecovError, ArithmeticError):
    """A series, quadrature or optimizer failed to reach its tolerance.

    Attributes
    ----------
    achieved : float or None
        Best error estimate reached before giving up.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DifferentiabilityError(DomainError):
    """A radial profile is not twice differentiable where it was asked to be."""


class NoSpectralDensityError(DomainError):
    """The family has no spectral density in the requested dimension."""


class InvalidModelError(HolecovError):
    """A model without a passing validity certificate was used where one is required."""


class FactorizationError(HolecovError, ArithmeticError):
    """Cholesky factorization failed even after the full jitter ladder."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition

"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A constructor or operation received an out-of-range parameter."""


class OutOfDomainError(ValueError):
    """A query point lies outside the unit square beyond tolerance."""


class UnsupportedDegreeError(ValueError):
    """No quadrature rule of the requested polynomial degree is available."""


class SolverFailureError(RuntimeError):
    """The linear solver did not meet the requested residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UpwindEscapeError(RuntimeError):
    """An upwind point left the domain by more than the clamping tolerance.

    Usually indicates a violated Courant-type step restriction.
    """

    def __init__(self, message, point=None, courant=None):
        super().__init__(message)
        self.point = point
        self.courant = courant

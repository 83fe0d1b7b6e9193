"""Exception types raised by klgof."""


class InvalidK(ValueError):
    """Neighborhood size incompatible with the sample size."""


class DuplicatePoints(ValueError):
    """A k-th nearest-neighbor radius is exactly zero."""


class DimensionMismatch(ValueError):
    """Two inputs live in spaces of different dimension."""


class SingularCovariance(ValueError):
    """The covariance matrix is not numerically positive definite."""


class DegenerateRegression(ValueError):
    """A log-log regression has an undefined (log of zero) response."""

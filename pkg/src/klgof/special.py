"""
Scalar special functions used by the nearest-neighbor estimators.

Both :func:`digamma` and :func:`log_gamma` shift the argument upward with
the usual recurrences and then evaluate an asymptotic (Bernoulli) series,
which keeps the absolute error near machine precision for arguments of
order one and above.
"""

import math

__all__ = ["digamma", "log_gamma", "log_unit_ball_volume", "EULER_GAMMA"]

EULER_GAMMA = 0.57721566490153286061

# B_2n / (2n) for n = 1..8
_DIGAMMA_COEFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
)

# B_2n / (2n (2n - 1)) for n = 1..7
_STIRLING_COEFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)

_DIGAMMA_SHIFT = 6.0
_LGAMMA_SHIFT = 10.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_positive(x, name):
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"{name} requires a finite positive argument, got {x!r}")
    return x


def digamma(x):
    """Digamma function psi(x) = d/dx log Gamma(x) for real x > 0."""
    x = _check_positive(x, "digamma")
    acc = 0.0
    while x < _DIGAMMA_SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    for c in reversed(_DIGAMMA_COEFS):
        series = series * inv2 + c
    return acc + math.log(x) - 0.5 / x - series * inv2


def log_gamma(x):
    """Natural log of the Gamma function for real x > 0."""
    x = _check_positive(x, "log_gamma")
    prod = 1.0
    while x < _LGAMMA_SHIFT:
        prod *= x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_STIRLING_COEFS):
        series = series * inv2 + c
    value = (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series * inv
    return value - math.log(prod)


def log_unit_ball_volume(m):
    """Log-volume of the Euclidean unit ball in R^m, ``log(pi^(m/2) / Gamma(m/2 + 1))``.

    Computed entirely in log space, so it stays finite in high dimension where
    the volume itself underflows.
    """
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"dimension must be a positive integer, got {m!r}")
    m = int(m)
    return 0.5 * m * math.log(math.pi) - log_gamma(0.5 * m + 1.0)

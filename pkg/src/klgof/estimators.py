"""
Nearest-neighbor estimators of differential entropy and KL divergence.

All quantities are in nats.  ``entropy_knn`` is the Kozachenko-Leonenko
estimator

    H = psi(N) - psi(k) + log V_m + (m / N) * sum_i log rho_i

and ``kl_knn`` the two-sample estimator

    D(f || g) = (m / N) * sum_i log(nu_i / rho_i) + psi(M) - psi(N - 1)

where ``rho_i`` is the k-th neighbor radius of ``x_i`` inside the x-sample
and ``nu_i`` its k-th neighbor radius in the y-sample.  Both keep the
digamma constants exactly; no ``log N`` approximations are used.

Per-point log radii are accumulated with :func:`math.fsum`, so the result
does not depend on summation order.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import cho_solve

from .exceptions import DimensionMismatch, InvalidK
from .neighbors import Backend, as_points, kth_nn_distances_cross, kth_nn_distances_within
from .special import digamma, log_unit_ball_volume

__all__ = [
    "Jitter",
    "EstimatorConfig",
    "EntropyEstimate",
    "KlEstimate",
    "entropy_knn",
    "kl_knn",
    "gaussian_entropy",
    "gaussian_kl_closed_form",
]

LOG_2PI_E = math.log(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class Jitter:
    """Break exact ties by adding uniform noise in ``[-scale, scale]`` per coordinate.

    With ``scale=None`` each coordinate uses ``1e-9`` times its sample
    standard deviation.  The noise is drawn from a generator seeded by
    ``seed`` so repeated calls perturb identically.
    """

    scale: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.scale is not None and not self.scale > 0:
            raise ValueError(f"jitter scale must be positive, got {self.scale!r}")

    def apply(self, x):
        if self.scale is None:
            sd = x.std(axis=0, ddof=1) if x.shape[0] > 1 else np.zeros(x.shape[1])
            fallback = np.maximum(np.abs(x).max(axis=0), 1.0)
            scale = 1e-9 * np.where(sd > 0, sd, fallback)
        else:
            scale = self.scale
        rng = np.random.default_rng(self.seed)
        return x + rng.uniform(-1.0, 1.0, size=x.shape) * scale


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings shared by the kNN estimators.

    ``duplicate_policy`` is ``"error"`` or a :class:`Jitter` instance.
    """

    k: int = 1
    duplicate_policy: Union[str, Jitter] = "error"
    backend: Backend = Backend.TREE

    def __post_init__(self):
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise InvalidK(f"k must be >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "backend", Backend(self.backend))
        if not isinstance(self.duplicate_policy, Jitter) and self.duplicate_policy != "error":
            raise ValueError(
                f"duplicate_policy must be 'error' or a Jitter, got {self.duplicate_policy!r}"
            )

    @property
    def jitter(self):
        return self.duplicate_policy if isinstance(self.duplicate_policy, Jitter) else None

    def to_dict(self):
        jit = self.jitter
        return {
            "k": self.k,
            "backend": self.backend.value,
            "duplicate_policy": "error"
            if jit is None
            else {"jitter_scale": jit.scale, "jitter_seed": jit.seed},
        }


def _as_config(config):
    if config is None:
        return EstimatorConfig()
    if isinstance(config, EstimatorConfig):
        return config
    return EstimatorConfig(k=config)


def _prepare(x, config):
    jit = config.jitter
    return jit.apply(x) if jit is not None else x


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    n: int
    k: int
    dim: int

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class KlEstimate:
    value: float
    n: int
    m_ref: int
    k: int
    dim: int

    def __float__(self):
        return self.value


def entropy_knn(sample, config=None):
    """Kozachenko-Leonenko estimate of the differential entropy of *sample*.

    Parameters
    ----------
    sample : array_like, shape (N, m)
    config : EstimatorConfig or int, optional
        An int is shorthand for ``EstimatorConfig(k=...)``.

    Returns
    -------
    EntropyEstimate
    """
    cfg = _as_config(config)
    x = _prepare(as_points(sample), cfg)
    n, m = x.shape
    rho = kth_nn_distances_within(x, cfg.k, backend=cfg.backend)
    log_sum = math.fsum(np.log(rho))
    value = digamma(n) - digamma(cfg.k) + log_unit_ball_volume(m) + m * log_sum / n
    return EntropyEstimate(value=value, n=n, k=cfg.k, dim=m)


def kl_knn(x_sample, y_sample, config=None):
    """Two-sample kNN estimate of ``D_KL(f || g)`` from ``x ~ f`` and ``y ~ g``.

    Finite-sample estimates can be negative and are returned unclipped.
    """
    cfg = _as_config(config)
    x = _prepare(as_points(x_sample, "x_sample"), cfg)
    y = _prepare(as_points(y_sample, "y_sample"), cfg)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(
            f"x_sample has dimension {x.shape[1]} but y_sample has {y.shape[1]}"
        )
    n, m = x.shape
    m_ref = y.shape[0]
    rho = kth_nn_distances_within(x, cfg.k, backend=cfg.backend)
    nu = kth_nn_distances_cross(x, y, cfg.k, backend=cfg.backend)
    log_ratio = math.fsum(np.log(nu) - np.log(rho))
    value = m * log_ratio / n + digamma(m_ref) - digamma(n - 1)
    return KlEstimate(value=value, n=n, m_ref=m_ref, k=cfg.k, dim=m)


def gaussian_entropy(cov_log_det, m):
    """Entropy of an m-variate Gaussian with ``log det(cov) = cov_log_det``."""
    return 0.5 * (m * LOG_2PI_E + cov_log_det)


def gaussian_kl_closed_form(f, g):
    """Exact ``D_KL(f || g)`` between two Gaussian models.

    *f* and *g* need ``mean``, ``cov``, ``chol`` and ``log_det`` attributes,
    as carried by :class:`klgof.benchmark.GaussianModel`.
    """
    mf, mg = np.atleast_1d(f.mean), np.atleast_1d(g.mean)
    if mf.shape != mg.shape:
        raise DimensionMismatch(f"model dimensions differ: {mf.shape[0]} vs {mg.shape[0]}")
    m = mf.shape[0]
    factor = (g.chol, True)
    trace = float(np.trace(cho_solve(factor, f.cov)))
    diff = mg - mf
    maha = float(diff @ cho_solve(factor, diff))
    value = 0.5 * (trace + maha - m + g.log_det - f.log_det)
    # rounding can leave a tiny negative for identical models
    return max(value, 0.0)

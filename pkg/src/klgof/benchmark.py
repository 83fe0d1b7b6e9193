"""
Gaussian models and the maximum-entropy benchmark.

Among densities with a given mean and covariance the Gaussian has the
largest entropy, so ``H(gaussian) - H(f)`` is the KL divergence from *f*
to its moment-matched Gaussian.  :func:`entropy_gap` evaluates this gap
with the Gaussian fitted by :func:`fit_gaussian` and an entropy estimate
of *f*.
"""

from dataclasses import dataclass

import numpy as np

from .estimators import EntropyEstimate, gaussian_entropy
from .exceptions import DimensionMismatch, SingularCovariance
from .neighbors import as_points

__all__ = ["GaussianModel", "fit_gaussian", "entropy_gap"]

# relative pivot floor below which the covariance counts as singular
_PIVOT_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Multivariate normal ``N(mean, cov)`` with its Cholesky factor cached."""

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    log_det: float

    @classmethod
    def from_moments(cls, mean, cov):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        m = mean.shape[0]
        if cov.shape != (m, m):
            raise DimensionMismatch(f"cov has shape {cov.shape}, expected {(m, m)}")
        cov = 0.5 * (cov + cov.T)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise SingularCovariance("covariance is not positive definite") from exc
        pivots = np.diag(chol) ** 2
        floor = _PIVOT_TOL * np.trace(cov) / m
        if not np.all(pivots > floor):
            raise SingularCovariance(
                f"covariance is numerically singular (smallest pivot {pivots.min():.3g})"
            )
        log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return cls(_frozen(mean), _frozen(cov), _frozen(chol), log_det)

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def entropy(self):
        return gaussian_entropy(self.log_det, self.dim)

    def summary(self):
        return {"mean": self.mean.tolist(), "log_det": self.log_det}


def fit_gaussian(sample):
    """Fit ``N(xbar, S)`` with the unbiased (N - 1) sample covariance.

    Raises
    ------
    SingularCovariance
        If N <= m or the sample covariance is numerically rank deficient.
    """
    x = as_points(sample)
    n, m = x.shape
    if n < m + 1:
        raise SingularCovariance(f"need at least m + 1 = {m + 1} observations, got {n}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    return GaussianModel.from_moments(mean, cov)


def entropy_gap(f_entropy, model):
    """Gaussian entropy of *model* minus the entropy of *f*.

    *f_entropy* is an :class:`EntropyEstimate` (its dimension is checked) or
    a plain number in nats.
    """
    if isinstance(f_entropy, EntropyEstimate):
        if f_entropy.dim != model.dim:
            raise DimensionMismatch(
                f"entropy estimate is {f_entropy.dim}-dimensional, model is {model.dim}-dimensional"
            )
        value = f_entropy.value
    else:
        value = float(f_entropy)
    return model.entropy - value

"""
KL-based goodness-of-fit test for multivariate normality.

The statistic is the entropy of the Gaussian fitted by sample mean and
(N - 1) covariance minus the kNN entropy estimate of the data.  It is near
zero for Gaussian data and tends to a positive limit otherwise.  Critical
values come from a parametric bootstrap: B samples of size N are drawn from
the fitted Gaussian, the statistic is recomputed on each with the same
estimator settings, and H0 is rejected when the observed value reaches the
upper (1 - alpha) order statistic.
"""

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Optional

import numpy as np

from ._parallel import pmap
from .benchmark import entropy_gap, fit_gaussian
from .estimators import EstimatorConfig, entropy_knn
from .exceptions import InvalidK
from .neighbors import as_points
from .samplers import SeededRng, sample_gaussian, stream_id

__all__ = [
    "DEFAULT_SEED",
    "TestConfig",
    "TestResult",
    "test_statistic",
    "order_statistic_quantile",
    "bootstrap_critical_value",
    "run_test",
]

DEFAULT_SEED = 0xC0FFEE


@dataclass(frozen=True)
class TestConfig:
    """Settings for one run of the bootstrap-calibrated test.

    ``estimator`` defaults to ``EstimatorConfig(k=k)``; when given, its
    ``k`` must agree with ``k``.
    """

    __test__ = False

    k: int = 1
    alpha: float = 0.05
    n_bootstrap: int = 1000
    seed: int = DEFAULT_SEED
    estimator: Optional[EstimatorConfig] = None

    def __post_init__(self):
        if self.estimator is None:
            object.__setattr__(self, "estimator", EstimatorConfig(k=self.k))
        elif self.estimator.k != self.k:
            raise ValueError(f"estimator.k={self.estimator.k} disagrees with k={self.k}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if isinstance(self.n_bootstrap, bool) or int(self.n_bootstrap) != self.n_bootstrap:
            raise ValueError(f"n_bootstrap must be an integer, got {self.n_bootstrap!r}")
        if self.n_bootstrap < 1:
            raise ValueError("n_bootstrap must be >= 1")
        if self.n_bootstrap < 100:
            warnings.warn(
                f"n_bootstrap={self.n_bootstrap} is small; 1000 or more is recommended",
                stacklevel=3,
            )

    def to_dict(self):
        return {
            "k": self.k,
            "alpha": self.alpha,
            "n_bootstrap": self.n_bootstrap,
            "seed": self.seed,
            "estimator": self.estimator.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class TestResult:
    __test__ = False

    t_observed: float
    critical_value: float
    p_value: float
    reject: bool
    null_statistics: np.ndarray
    config: TestConfig
    model_mean: np.ndarray
    model_log_det: float
    n: int
    dim: int

    def to_dict(self):
        return {
            "schema_version": 1,
            "t_observed": self.t_observed,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "n": self.n,
            "dim": self.dim,
            "config": self.config.to_dict(),
            "fitted_model": {"mean": self.model_mean.tolist(), "log_det": self.model_log_det},
            "null_statistics": self.null_statistics.tolist(),
        }


def _estimator(config):
    if isinstance(config, TestConfig):
        return config.estimator
    if isinstance(config, EstimatorConfig):
        return config
    return EstimatorConfig() if config is None else EstimatorConfig(k=config)


def test_statistic(sample, config=None, model=None):
    """Fitted-Gaussian entropy minus kNN entropy of *sample* (may be negative).

    Parameters
    ----------
    sample : array_like, shape (N, m)
    config : EstimatorConfig, TestConfig or int (k), optional
    model : GaussianModel, optional
        Precomputed ``fit_gaussian(sample)``.
    """
    est = _estimator(config)
    x = as_points(sample)
    n, m = x.shape
    if n < est.k + 1:
        raise InvalidK(f"k={est.k} needs at least {est.k + 1} observations, got {n}")
    if model is None:
        model = fit_gaussian(x)
    return entropy_gap(entropy_knn(x, est), model)


test_statistic.__test__ = False


def order_statistic_quantile(values, alpha):
    """Upper (1 - alpha) quantile as the order statistic ``ceil((1 - alpha)(B + 1))``.

    The index is 1-based and clipped to ``[1, B]``; no interpolation.
    """
    v = np.sort(np.asarray(values, dtype=float))
    b = v.shape[0]
    if b == 0:
        raise ValueError("no values to take a quantile of")
    # the epsilon keeps exact products like 0.95 * 1000 from rounding up
    idx = math.ceil((1.0 - alpha) * (b + 1) - 1e-9)
    idx = min(max(idx, 1), b)
    return float(v[idx - 1])


def _bootstrap_replicate(b, model, n, est, seed):
    rng = SeededRng(seed, stream_id("bootstrap", b))
    xb = sample_gaussian(model, n, rng)
    try:
        return test_statistic(xb, est)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise type(exc)(f"bootstrap replication {b} failed: {exc}") from exc


def _null_statistics(model, n, config, workers=1):
    fn = partial(_bootstrap_replicate, model=model, n=n, est=config.estimator, seed=config.seed)
    return np.array(pmap(fn, range(config.n_bootstrap), workers), dtype=float)


def bootstrap_critical_value(sample, config=None, workers=1):
    """Parametric-bootstrap critical value of the statistic for *sample*.

    Returns
    -------
    critical_value : float
    null_statistics : ndarray, shape (B,)
        Replication b is driven by stream ``stream_id("bootstrap", b)`` of
        ``config.seed``, so the output does not depend on *workers*.
    """
    config = config or TestConfig()
    x = as_points(sample)
    model = fit_gaussian(x)
    null = _null_statistics(model, x.shape[0], config, workers)
    return order_statistic_quantile(null, config.alpha), null


def run_test(sample, config=None, workers=1):
    """Full test: observed statistic, bootstrap calibration, p-value and decision."""
    config = config or TestConfig()
    x = as_points(sample)
    n, m = x.shape
    model = fit_gaussian(x)
    t_obs = test_statistic(x, config.estimator, model=model)
    null = _null_statistics(model, n, config, workers)
    crit = order_statistic_quantile(null, config.alpha)
    p_value = (1 + int(np.count_nonzero(null >= t_obs))) / (null.shape[0] + 1)
    null.setflags(write=False)
    return TestResult(
        t_observed=float(t_obs),
        critical_value=crit,
        p_value=p_value,
        reject=bool(t_obs >= crit),
        null_statistics=null,
        config=config,
        model_mean=model.mean,
        model_log_det=model.log_det,
        n=n,
        dim=m,
    )

"""kNN entropy and KL-divergence estimators with a KL test for multivariate normality."""

from .benchmark import GaussianModel, entropy_gap, fit_gaussian
from .estimators import (
    EntropyEstimate,
    EstimatorConfig,
    Jitter,
    KlEstimate,
    entropy_knn,
    gaussian_entropy,
    gaussian_kl_closed_form,
    kl_knn,
)
from .exceptions import (
    DegenerateRegression,
    DimensionMismatch,
    DuplicatePoints,
    InvalidK,
    SingularCovariance,
)
from .goftest import TestConfig, TestResult, bootstrap_critical_value, run_test, test_statistic
from .neighbors import Backend, kth_nn_distances_cross, kth_nn_distances_within
from .samplers import (
    AlternativeSpec,
    SeededRng,
    sample_gaussian,
    sample_generalized_gaussian,
    sample_student_t,
)
from .special import digamma, log_gamma, log_unit_ball_volume

__version__ = "0.1.0"

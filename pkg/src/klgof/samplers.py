"""
Reproducible samplers for the Gaussian, isotropic generalized Gaussian and
multivariate Student-t families.

Randomness is always derived from a ``(master_seed, stream_id)`` pair.  The
stream id is a stable 64-bit hash of whatever keys identify a unit of work
(experiment, cell, replication), so results do not depend on the order in
which independent tasks happen to run.
"""

import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .special import log_gamma

__all__ = [
    "SeededRng",
    "stream_id",
    "AlternativeSpec",
    "sample_gaussian",
    "sample_generalized_gaussian",
    "sample_student_t",
    "gg_coordinate_variance",
]

_MASK64 = (1 << 64) - 1


def stream_id(*keys):
    """Stable 64-bit id for a tuple of keys (ints, floats, strings)."""
    text = "\x1f".join(repr(k) for k in keys).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class SeededRng:
    """Handle on one independent random stream."""

    master_seed: int
    stream_id: int = 0

    def generator(self):
        """A fresh :class:`numpy.random.Generator` positioned at the start of the stream."""
        seq = np.random.SeedSequence(
            int(self.master_seed) & _MASK64, spawn_key=(int(self.stream_id) & _MASK64,)
        )
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, *keys):
        return SeededRng(self.master_seed, stream_id(self.stream_id, *keys))


def _generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.generator()
    if rng is None:
        raise ValueError("an explicit rng or seed is required")
    return SeededRng(int(rng)).generator()


def _check_n(n):
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _check_dim(m):
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"dimension must be a positive integer, got {m!r}")
    return int(m)


def sample_gaussian(model, n, rng):
    """Draw *n* rows ``mean + chol @ z`` from a :class:`~klgof.benchmark.GaussianModel`."""
    n = _check_n(n)
    gen = _generator(rng)
    z = gen.standard_normal((n, model.dim))
    return model.mean + z @ model.chol.T


def gg_coordinate_variance(m, s, scale=None):
    """Per-coordinate variance of the isotropic GG with density ``exp(-|x|^s / scale)``."""
    scale = s if scale is None else scale
    log_r2 = (2.0 / s) * math.log(scale) + log_gamma((m + 2.0) / s) - log_gamma(m / s)
    return math.exp(log_r2) / m


def sample_generalized_gaussian(m, s, n, standardize=True, rng=None, scale=None):
    """Isotropic generalized Gaussian in R^m, density proportional to ``exp(-|x|^s / scale)``.

    A draw is ``R * U`` with ``U`` uniform on the unit sphere and
    ``R**s ~ Gamma(m / s, scale)``.  ``scale`` defaults to ``s``, which makes
    ``s = 2`` the standard normal.  With ``standardize`` the output is
    rescaled to identity covariance and ``scale`` only changes the stream.
    """
    m, n = _check_dim(m), _check_n(n)
    if not s > 0:
        raise ValueError(f"shape s must be positive, got {s!r}")
    scale = float(s if scale is None else scale)
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    gen = _generator(rng)
    direction = gen.standard_normal((n, m))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = gen.gamma(m / s, scale, size=n) ** (1.0 / s)
    x = direction * radius[:, None]
    if standardize:
        x /= math.sqrt(gg_coordinate_variance(m, s, scale))
    return x


def sample_student_t(m, nu, n, standardize=True, rng=None):
    """Multivariate Student-t with *nu* degrees of freedom: ``z / sqrt(w / nu)``.

    ``z ~ N(0, I_m)`` and ``w ~ chi2(nu)`` is shared by all coordinates of a
    row.  ``standardize`` multiplies by ``sqrt((nu - 2) / nu)`` so the
    covariance is the identity, which needs ``nu > 2``.
    """
    m, n = _check_dim(m), _check_n(n)
    if not nu > 0:
        raise ValueError(f"degrees of freedom must be positive, got {nu!r}")
    if standardize and not nu > 2:
        raise ValueError(f"standardize needs nu > 2 for a finite covariance, got {nu!r}")
    gen = _generator(rng)
    z = gen.standard_normal((n, m))
    w = gen.chisquare(nu, size=n)
    x = z / np.sqrt(w / nu)[:, None]
    if standardize:
        x *= math.sqrt((nu - 2.0) / nu)
    return x


@dataclass(frozen=True)
class AlternativeSpec:
    """A named distribution family at a fixed dimension.

    ``family`` is one of ``"gaussian"``, ``"generalized_gaussian"`` (needs
    ``s``) or ``"student_t"`` (needs ``nu``).
    """

    family: str
    dim: int
    s: Optional[float] = None
    nu: Optional[float] = None
    standardize: bool = True

    def __post_init__(self):
        _check_dim(self.dim)
        if self.family == "generalized_gaussian":
            if self.s is None or not self.s > 0:
                raise ValueError(f"generalized_gaussian needs s > 0, got {self.s!r}")
        elif self.family == "student_t":
            if self.nu is None or not self.nu > 0:
                raise ValueError(f"student_t needs nu > 0, got {self.nu!r}")
            if self.standardize and not self.nu > 2:
                raise ValueError(f"standardized student_t needs nu > 2, got {self.nu!r}")
        elif self.family != "gaussian":
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def label(self):
        if self.family == "generalized_gaussian":
            return f"gg_s{self.s:g}"
        if self.family == "student_t":
            return f"t_nu{self.nu:g}"
        return "gaussian"

    @property
    def parameter(self):
        return {"generalized_gaussian": self.s, "student_t": self.nu}.get(self.family)

    def sample(self, n, rng):
        if self.family == "generalized_gaussian":
            return sample_generalized_gaussian(self.dim, self.s, n, self.standardize, rng)
        if self.family == "student_t":
            return sample_student_t(self.dim, self.nu, n, self.standardize, rng)
        return _generator(rng).standard_normal((_check_n(n), self.dim))

"""
Monte Carlo campaigns for the KL normality statistic.

An :class:`ExperimentSpec` names a kind of study and a grid; the matching
``run_*`` function returns an :class:`ExperimentReport` whose JSON and CSV
renderings are byte-stable for a fixed seed.  Every replication draws from
its own stream, keyed by (experiment name, cell, replication), so the
worker count never changes a result.

Alternatives are standardized to identity covariance, which makes the
statistic's population value the pure shape gap to the Gaussian.
"""

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from functools import partial
from itertools import product
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from ._parallel import pmap
from .estimators import EstimatorConfig
from .exceptions import DegenerateRegression
from .goftest import DEFAULT_SEED, TestConfig, order_statistic_quantile, run_test, test_statistic
from .neighbors import Backend
from .samplers import AlternativeSpec, SeededRng, stream_id

__all__ = [
    "KINDS",
    "SpecError",
    "ExperimentSpec",
    "ExperimentReport",
    "preset_spec",
    "loglog_slope",
    "run_experiment",
    "run_convergence",
    "run_power",
    "run_critical_values",
    "run_slopes",
    "run_standardized_diagnostics",
]

KINDS = ("convergence", "power", "critical_values", "slopes", "diagnostics")

KDE_GRID = np.linspace(-4.0, 4.0, 256)


class SpecError(ValueError):
    """An experiment spec is invalid; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _int_tuple(key, values, minimum):
    if isinstance(values, (int, float)) and not isinstance(values, bool):
        values = [values]
    try:
        out = tuple(values)
    except TypeError:
        raise SpecError(key, f"expected a list of integers, got {values!r}") from None
    if not out:
        raise SpecError(key, "must not be empty")
    for v in out:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
            raise SpecError(key, f"expected integers, got {v!r}")
        if v < minimum:
            raise SpecError(key, f"{key} must be ≥ {minimum}, got {int(v)}")
    return tuple(int(v) for v in out)


def _float_tuple(key, values, allow_empty=False):
    if isinstance(values, (int, float)) and not isinstance(values, bool):
        values = [values]
    try:
        out = tuple(values)
    except TypeError:
        raise SpecError(key, f"expected a list of numbers, got {values!r}") from None
    if not out and not allow_empty:
        raise SpecError(key, "must not be empty")
    for v in out:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise SpecError(key, f"expected positive numbers, got {v!r}")
    return tuple(float(v) for v in out)


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one Monte Carlo campaign.

    Grid axes: ``m`` (dimensions), ``n`` (sample sizes), ``k`` (neighbor
    ranks), ``s`` (generalized Gaussian shapes) and ``nu`` (Student-t
    degrees of freedom, power studies only).
    """

    kind: str
    m: Tuple[int, ...] = (2,)
    n: Tuple[int, ...] = (500,)
    k: Tuple[int, ...] = (1,)
    s: Tuple[float, ...] = (2.0,)
    nu: Tuple[float, ...] = ()
    replications: int = 100
    alpha: float = 0.05
    seed: int = DEFAULT_SEED
    bootstrap_b: int = 1000
    per_dataset_bootstrap: bool = False
    backend: str = "tree"
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError("kind", f"must be one of {', '.join(KINDS)}, got {self.kind!r}")
        set_ = partial(object.__setattr__, self)
        set_("m", _int_tuple("m", self.m, 1))
        set_("k", _int_tuple("k", self.k, 1))
        set_("n", _int_tuple("N", self.n, 2))
        set_("s", _float_tuple("s", self.s))
        set_("nu", _float_tuple("nu", self.nu, allow_empty=True))
        reps = self.replications
        if isinstance(reps, bool) or not isinstance(reps, int) or reps < 2:
            raise SpecError("replications", f"must be an integer ≥ 2, got {reps!r}")
        if not isinstance(self.alpha, (int, float)) or not 0 < self.alpha < 1:
            raise SpecError("alpha", f"must lie in (0, 1), got {self.alpha!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise SpecError("seed", f"must be a non-negative integer, got {self.seed!r}")
        b = self.bootstrap_b
        if isinstance(b, bool) or not isinstance(b, int) or b < 1:
            raise SpecError("bootstrap_B", f"must be a positive integer, got {b!r}")
        try:
            Backend(self.backend)
        except ValueError:
            raise SpecError("backend", f"must be 'tree' or 'brute', got {self.backend!r}") from None
        if self.name is None:
            set_("name", self.kind)
        elif not str(self.name).replace("_", "").replace("-", "").isalnum():
            raise SpecError("name", "may contain only letters, digits, '_' and '-'")
        for n, k in product(self.n, self.k):
            if n < k + 1:
                raise SpecError("k", f"k={k} needs N ≥ {k + 1}, but the grid has N={n}")
        for n, m in product(self.n, self.m):
            if n < m + 1:
                raise SpecError("N", f"N={n} is too small for dimension m={m}")
        for nu in self.nu:
            if nu <= 2:
                raise SpecError("nu", f"standardized Student-t needs nu > 2, got {nu:g}")
        if self.kind == "slopes" and len(self.n) < 4:
            raise SpecError("N", "slope regression needs at least 4 sample sizes")
        if self.kind == "power" and not self.s and not self.nu:
            raise SpecError("s", "power studies need at least one alternative")

    @classmethod
    def from_dict(cls, data, kind=None):
        """Build a spec from a parsed config tree.

        Top-level keys: ``kind``, ``name``, ``seed``, ``replications``,
        ``alpha``, ``bootstrap_B``, ``per_dataset_bootstrap``, ``backend``
        and ``grid`` (with ``m``, ``N``, ``k``, ``s``, ``nu``).
        """
        if not isinstance(data, dict):
            raise SpecError("<root>", "spec must be a mapping")
        data = dict(data)
        grid = data.pop("grid", {}) or {}
        if not isinstance(grid, dict):
            raise SpecError("grid", "must be a mapping")
        top = {
            "kind": "kind",
            "name": "name",
            "seed": "seed",
            "replications": "replications",
            "alpha": "alpha",
            "bootstrap_B": "bootstrap_b",
            "per_dataset_bootstrap": "per_dataset_bootstrap",
            "backend": "backend",
        }
        axes = {"m": "m", "N": "n", "k": "k", "s": "s", "nu": "nu"}
        kwargs = {}
        for key, value in data.items():
            if key not in top:
                raise SpecError(key, "unknown key")
            kwargs[top[key]] = value
        for key, value in grid.items():
            if key not in axes:
                raise SpecError(f"grid.{key}", "unknown grid axis")
            kwargs[axes[key]] = value
        if kind is not None:
            if kwargs.get("kind", kind) != kind:
                raise SpecError("kind", f"expected {kind!r}, got {kwargs['kind']!r}")
            kwargs["kind"] = kind
        if "kind" not in kwargs:
            raise SpecError("kind", "missing")
        if "per_dataset_bootstrap" in kwargs and not isinstance(kwargs["per_dataset_bootstrap"], bool):
            raise SpecError("per_dataset_bootstrap", "must be true or false")
        return cls(**kwargs)

    def to_dict(self):
        return {
            "kind": self.kind,
            "name": self.name,
            "seed": self.seed,
            "replications": self.replications,
            "alpha": self.alpha,
            "bootstrap_B": self.bootstrap_b,
            "per_dataset_bootstrap": self.per_dataset_bootstrap,
            "backend": self.backend,
            "grid": {
                "m": list(self.m),
                "N": list(self.n),
                "k": list(self.k),
                "s": list(self.s),
                "nu": list(self.nu),
            },
        }

    @property
    def spec_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentSpec(**d)


def preset_spec(kind, full_scale=False, **overrides):
    """Default grids: desk scale (N <= 2000, M <= 300) or full scale (up to M = 1000 replications)."""
    if kind == "convergence":
        spec = dict(m=(1, 2, 3), s=(1.0, 2.0, 4.0, 8.0), k=(1,), n=(500, 1000, 2000), replications=100)
        if full_scale:
            spec.update(n=(1000, 2000, 3000, 4000, 5000))
    elif kind == "power":
        spec = dict(m=(2,), n=(500, 1000), k=(1,), s=(1.0, 1.5, 2.0, 2.5, 3.0, 4.0),
                    nu=(3.0, 5.0, 10.0, 30.0), replications=300, bootstrap_b=1000)
        if full_scale:
            spec.update(m=(1, 2, 3), k=(1, 2, 3), replications=1000)
    elif kind == "critical_values":
        spec = dict(s=(2.0,), n=(100, 200, 500, 1000), m=(2, 3), k=(1, 2, 3), replications=300)
        if full_scale:
            spec.update(s=(1.5, 2.0, 2.5), n=tuple(range(100, 1001, 100)), replications=1000)
    elif kind == "slopes":
        spec = dict(m=(1, 2), s=(1.0, 2.0, 4.0), k=(1,), n=(250, 500, 1000, 2000), replications=100)
        if full_scale:
            spec.update(m=(1, 2, 3), s=(1.0, 1.5, 2.0, 2.5, 3.0, 4.0), k=(1, 2, 3),
                        n=(1000, 2000, 3000, 4000, 5000))
    elif kind == "diagnostics":
        spec = dict(m=(2,), n=(1000,), k=(1, 2, 3), replications=300)
        if full_scale:
            spec.update(replications=1000)
    else:
        raise SpecError("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    spec.update(overrides)
    return ExperimentSpec(kind=kind, **spec)


@dataclass
class ExperimentReport:
    """Aggregated results of one campaign.

    ``cells`` holds one record per grid point; ``tables`` maps a cell name
    to CSV rows (first row is the header).  ``wall_time`` is kept out of
    the serialized forms so reruns are byte-identical.
    """

    spec: ExperimentSpec
    cells: List[Dict[str, Any]]
    tables: Dict[str, List[list]]
    conventions: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def metadata(self):
        return {
            "seed": self.spec.seed,
            "spec_hash": self.spec.spec_hash,
            "spec": self.spec.to_dict(),
            "conventions": self.conventions,
        }

    def to_dict(self):
        return {
            "schema_version": 1,
            "experiment": self.spec.name,
            "kind": self.spec.kind,
            "metadata": self.metadata,
            "cells": self.cells,
        }

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2) + "\n"

    def csv_text(self, table):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.tables[table]:
            writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def file_contents(self):
        files = {f"{self.spec.name}_report.json": self.to_json()}
        for table in self.tables:
            files[f"{self.spec.name}_{table}.csv"] = self.csv_text(table)
        return files

    def write(self, out_dir):
        """Write the JSON report and all CSV tables; returns the written paths.

        Each file is staged under a temporary name and moved into place, so
        an interrupted run never leaves a half-written file behind.
        """
        os.makedirs(out_dir, exist_ok=True)
        contents = self.file_contents()
        staged = []
        try:
            for fname, text in contents.items():
                fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".tmp-", suffix=".part")
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, os.path.join(out_dir, fname)))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, final in staged:
            os.replace(tmp, final)
        return [final for _, final in staged]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- replication workers (module level so they pickle) ---------------------


def _statistic_task(task):
    alt, n, est, seed, sid = task
    x = alt.sample(n, SeededRng(seed, sid))
    return test_statistic(x, est)


def _per_dataset_task(task):
    alt, n, cfg, seed, sid = task
    x = alt.sample(n, SeededRng(seed, sid))
    res = run_test(x, cfg)
    return res.t_observed, res.critical_value, res.reject


def _statistics(spec, alt, n, k, tag, count, workers):
    est = EstimatorConfig(k=k, backend=spec.backend)
    base = stream_id(spec.name, tag, alt.label, alt.dim, n, k)
    tasks = [(alt, n, est, spec.seed, stream_id(base, r)) for r in range(count)]
    return np.array(pmap(_statistic_task, tasks, workers), dtype=float), base


def _gg(m, s):
    return AlternativeSpec("generalized_gaussian", m, s=s)


def _summary(values):
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values, ddof=1)),
        "count": int(values.shape[0]),
    }


def _provenance(spec, base, count):
    return {"seed": spec.seed, "stream_base": base, "replications": count}


def _tick(progress, done, total, cell):
    if progress is not None:
        progress(done, total, cell)


def _gg_conventions():
    return {
        "generalized_gaussian": "isotropic, density exp(-|x|^s / s), standardized to identity covariance",
        "student_t": "standardized to identity covariance",
        "std_ddof": 1,
    }


def _fmt(v):
    return f"{v:g}"


# -- campaigns ----------------------------------------------------------------


def run_convergence(spec, workers=1, progress=None):
    """Mean and standard deviation of the statistic under GG(m, s) for every (s, m, N, k)."""
    _expect(spec, "convergence")
    start = time.perf_counter()
    cells, tables = [], {}
    grid = list(product(spec.s, spec.m, spec.k, spec.n))
    for i, (s, m, k, n) in enumerate(grid):
        values, base = _statistics(spec, _gg(m, s), n, k, "convergence", spec.replications, workers)
        rec = {"cell": {"s": s, "m": m, "N": n, "k": k}, **_summary(values),
               "extra": {}, "provenance": _provenance(spec, base, spec.replications)}
        cells.append(rec)
        table = tables.setdefault(f"s{_fmt(s)}_m{m}_k{k}", [["N", "mean", "std", "count"]])
        table.append([n, rec["mean"], rec["std"], rec["count"]])
        _tick(progress, i + 1, len(grid), rec["cell"])
    return ExperimentReport(spec, cells, tables, _gg_conventions(), time.perf_counter() - start)


def _alternatives(spec, m):
    alts = [_gg(m, s) for s in spec.s]
    alts += [AlternativeSpec("student_t", m, nu=nu) for nu in spec.nu]
    return alts


def run_power(spec, workers=1, progress=None):
    """Empirical rejection rate of the test against each alternative.

    By default each (N, m, k) gets one critical value from ``bootstrap_B``
    statistics of standard Gaussian samples (the alternatives share the
    identity covariance).  With ``per_dataset_bootstrap`` every replication
    instead runs the full bootstrap test on its own fitted Gaussian.
    """
    _expect(spec, "power")
    start = time.perf_counter()
    cells, tables = [], {}
    grid = list(product(spec.m, spec.k, spec.n))
    total = sum(len(_alternatives(spec, m)) for m, _, _ in grid)
    done = 0
    for m, k, n in grid:
        crit, null_base = None, None
        if not spec.per_dataset_bootstrap:
            null, null_base = _statistics(
                spec, AlternativeSpec("gaussian", m), n, k, "null", spec.bootstrap_b, workers
            )
            crit = order_statistic_quantile(null, spec.alpha)
        for alt in _alternatives(spec, m):
            base = stream_id(spec.name, "power", alt.label, m, n, k)
            if spec.per_dataset_bootstrap:
                cfg = TestConfig(k=k, alpha=spec.alpha, n_bootstrap=spec.bootstrap_b,
                                 estimator=EstimatorConfig(k=k, backend=spec.backend))
                tasks = [
                    (alt, n, _reseed(cfg, stream_id(base, "boot", r)), spec.seed, stream_id(base, r))
                    for r in range(spec.replications)
                ]
                out = pmap(_per_dataset_task, tasks, workers)
                values = np.array([o[0] for o in out])
                rejects = np.array([o[2] for o in out])
                crit_cell = float(np.mean([o[1] for o in out]))
            else:
                tasks = [
                    (alt, n, EstimatorConfig(k=k, backend=spec.backend), spec.seed, stream_id(base, r))
                    for r in range(spec.replications)
                ]
                values = np.array(pmap(_statistic_task, tasks, workers), dtype=float)
                rejects = values >= crit
                crit_cell = crit
            power = float(np.mean(rejects))
            rec = {
                "cell": {"family": alt.family, "parameter": alt.parameter, "m": m, "N": n, "k": k},
                **_summary(values),
                "extra": {
                    "power": power,
                    "critical_value": crit_cell,
                    "calibration": "per_dataset" if spec.per_dataset_bootstrap else "per_cell",
                    "null_stream_base": null_base,
                },
                "provenance": _provenance(spec, base, spec.replications),
            }
            cells.append(rec)
            family = "gg" if alt.family == "generalized_gaussian" else "t"
            table = tables.setdefault(
                f"{family}_m{m}_k{k}_N{n}",
                [["parameter", "power", "critical_value", "mean_T", "std_T", "count"]],
            )
            table.append([alt.parameter, power, crit_cell, rec["mean"], rec["std"], rec["count"]])
            done += 1
            _tick(progress, done, total, rec["cell"])
    conv = _gg_conventions()
    conv["null_calibration"] = (
        "per-dataset parametric bootstrap" if spec.per_dataset_bootstrap
        else "per-cell, standard Gaussian null with bootstrap_B draws"
    )
    return ExperimentReport(spec, cells, tables, conv, time.perf_counter() - start)


def _reseed(cfg, seed):
    return TestConfig(k=cfg.k, alpha=cfg.alpha, n_bootstrap=cfg.n_bootstrap, seed=seed,
                      estimator=cfg.estimator)


def run_critical_values(spec, workers=1, progress=None):
    """Upper alpha critical values from ``replications`` statistics per (s, N, m, k).

    One CSV per shape ``s`` in the usual layout: rows are N and
    columns are the (m, k) pairs.
    """
    _expect(spec, "critical_values")
    start = time.perf_counter()
    cells, tables = [], {}
    columns = list(product(spec.m, spec.k))
    grid = list(product(spec.s, spec.n, columns))
    for i, (s, n, (m, k)) in enumerate(grid):
        values, base = _statistics(spec, _gg(m, s), n, k, "critical_values", spec.replications, workers)
        crit = order_statistic_quantile(values, spec.alpha)
        rec = {"cell": {"s": s, "N": n, "m": m, "k": k}, **_summary(values),
               "extra": {"critical_value": crit}, "provenance": _provenance(spec, base, spec.replications)}
        cells.append(rec)
        table = tables.setdefault(
            f"s{_fmt(s)}", [["N"] + [f"m{mm}_k{kk}" for mm, kk in columns]]
        )
        if table[-1][0] != n:
            table.append([n])
        table[-1].append(crit)
        _tick(progress, i + 1, len(grid), rec["cell"])
    conv = _gg_conventions()
    conv["quantile"] = "order statistic ceil((1 - alpha)(M + 1)), no interpolation"
    return ExperimentReport(spec, cells, tables, conv, time.perf_counter() - start)


def loglog_slope(n_values, mean_values):
    """OLS fit of ``log|mean| = intercept + slope * log N``.

    Returns ``(slope, intercept)``.  Raises :class:`DegenerateRegression` if
    any mean is exactly zero.
    """
    n = np.asarray(n_values, dtype=float)
    y = np.abs(np.asarray(mean_values, dtype=float))
    if n.shape != y.shape or n.shape[0] < 2:
        raise ValueError("need matching arrays with at least two points")
    if np.any(y == 0.0):
        raise DegenerateRegression("log of a zero mean is undefined")
    lx, ly = np.log(n), np.log(y)
    xc = lx - lx.mean()
    slope = float(np.dot(xc, ly - ly.mean()) / np.dot(xc, xc))
    intercept = float(ly.mean() - slope * lx.mean())
    return slope, intercept


def run_slopes(spec, workers=1, progress=None):
    """Log-log slope of ``|mean T|`` against N for every (m, s, k).

    The mean is taken over replications first and the absolute value
    afterwards.  A curve with an exactly zero mean is reported as censored.
    """
    _expect(spec, "slopes")
    start = time.perf_counter()
    cells = []
    tables = {"table": [["m", "s", "k", "slope", "intercept", "censored"]]}
    grid = list(product(spec.m, spec.s, spec.k))
    for i, (m, s, k) in enumerate(grid):
        means, stds, bases = [], [], []
        for n in spec.n:
            values, base = _statistics(spec, _gg(m, s), n, k, "slopes", spec.replications, workers)
            means.append(float(np.mean(values)))
            stds.append(float(np.std(values, ddof=1)))
            bases.append(base)
        try:
            slope, intercept = loglog_slope(spec.n, means)
            censored = False
        except DegenerateRegression:
            slope = intercept = None
            censored = True
        rec = {
            "cell": {"m": m, "s": s, "k": k},
            "mean": means,
            "std": stds,
            "count": spec.replications,
            "extra": {"N": list(spec.n), "slope": slope, "intercept": intercept, "censored": censored},
            "provenance": {"seed": spec.seed, "stream_base": bases, "replications": spec.replications},
        }
        cells.append(rec)
        tables["table"].append([m, s, k, slope, intercept, censored])
        curve = tables.setdefault(f"m{m}_s{_fmt(s)}_k{k}", [["N", "mean_T", "abs_mean_T", "std_T"]])
        for n, mu, sd in zip(spec.n, means, stds):
            curve.append([n, mu, abs(mu), sd])
        _tick(progress, i + 1, len(grid), rec["cell"])
    conv = _gg_conventions()
    conv["regression"] = "OLS of log|mean over replications of T| on log N"
    return ExperimentReport(spec, cells, tables, conv, time.perf_counter() - start)


def standardize(values):
    """``(values - mean) / std`` with the ddof=1 standard deviation."""
    values = np.asarray(values, dtype=float)
    return (values - values.mean()) / values.std(ddof=1)


def gaussian_kde(z, grid=KDE_GRID):
    """Gaussian-kernel density of *z* on *grid*, Silverman bandwidth ``1.06 sd M^(-1/5)``.

    Returns ``(density, bandwidth)``.
    """
    z = np.asarray(z, dtype=float)
    bw = 1.06 * z.std(ddof=1) * z.shape[0] ** (-0.2)
    u = (grid[:, None] - z[None, :]) / bw
    density = np.exp(-0.5 * u * u).sum(axis=1) / (z.shape[0] * bw * math.sqrt(2.0 * math.pi))
    return density, bw


def qq_pairs(z):
    """(theoretical normal quantile, empirical quantile) at plotting positions (i - 0.5)/M."""
    z = np.sort(np.asarray(z, dtype=float))
    probs = (np.arange(1, z.shape[0] + 1) - 0.5) / z.shape[0]
    return stats.norm.ppf(probs), z


def run_standardized_diagnostics(spec, workers=1, progress=None):
    """Standardized null statistic Z with KDE and Q-Q data for every (m, N, k)."""
    _expect(spec, "diagnostics")
    start = time.perf_counter()
    cells, tables = [], {}
    grid = list(product(spec.m, spec.n, spec.k))
    for i, (m, n, k) in enumerate(grid):
        values, base = _statistics(
            spec, AlternativeSpec("gaussian", m), n, k, "diagnostics", spec.replications, workers
        )
        z = standardize(values)
        density, bw = gaussian_kde(z)
        theo, emp = qq_pairs(z)
        ks = float(stats.kstest(z, "norm").statistic)
        rec = {
            "cell": {"m": m, "N": n, "k": k},
            **_summary(values),
            "extra": {"ks_distance": ks, "bandwidth": bw, "z": z},
            "provenance": _provenance(spec, base, spec.replications),
        }
        cells.append(rec)
        name = f"m{m}_N{n}_k{k}"
        tables[f"{name}_kde"] = [["z", "density", "normal_density"]] + [
            [float(g), float(d), float(stats.norm.pdf(g))] for g, d in zip(KDE_GRID, density)
        ]
        tables[f"{name}_qq"] = [["theoretical", "empirical"]] + [
            [float(a), float(b)] for a, b in zip(theo, emp)
        ]
        _tick(progress, i + 1, len(grid), rec["cell"])
    conv = {"kde_bandwidth": "Silverman 1.06 * sd * M^(-1/5)", "kde_grid": [-4.0, 4.0, 256],
            "qq_positions": "(i - 0.5) / M", "null": "standard Gaussian", "std_ddof": 1}
    return ExperimentReport(spec, cells, tables, conv, time.perf_counter() - start)


_RUNNERS = {
    "convergence": run_convergence,
    "power": run_power,
    "critical_values": run_critical_values,
    "slopes": run_slopes,
    "diagnostics": run_standardized_diagnostics,
}


def _expect(spec, kind):
    if spec.kind != kind:
        raise SpecError("kind", f"expected {kind!r}, got {spec.kind!r}")


def run_experiment(spec, workers=1, progress=None):
    """Dispatch *spec* to the runner for its kind."""
    return _RUNNERS[spec.kind](spec, workers=workers, progress=progress)

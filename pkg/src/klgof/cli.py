"""
Command-line interface.

    klgof test DATA.csv [--k 1] [--alpha 0.05] [--bootstrap 1000] [--out DIR]
    klgof calibrate [SPEC] --out DIR
    klgof simulate SPEC --out DIR
    klgof power [SPEC] --out DIR [--per-dataset-bootstrap]
    klgof slopes [SPEC] --out DIR
    klgof diagnostics [SPEC] --out DIR

``test`` exits 0 when normality is not rejected, 1 when it is, and 2 on
any error.  Experiment commands exit 0 or 2.  The master seed is taken
from ``--seed``, then the ``KLGOF_SEED`` environment variable, then the
spec file, then the built-in default 0xC0FFEE.
"""

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from .estimators import EstimatorConfig, Jitter
from .exceptions import DimensionMismatch, DuplicatePoints, InvalidK, SingularCovariance
from .experiments import ExperimentSpec, SpecError, preset_spec, run_experiment
from .goftest import DEFAULT_SEED, TestConfig, run_test
from .io import CsvFormatError, read_points_csv

SEED_ENV = "KLGOF_SEED"

EXIT_ACCEPT, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


def _parse_seed(text, source):
    try:
        value = int(str(text).strip(), 0)
    except ValueError:
        raise CliError(f"invalid seed {text!r} from {source}") from None
    if value < 0:
        raise CliError(f"seed from {source} must be non-negative")
    return value


def resolve_seed(flag=None, spec_seed=None, environ=None):
    """Return ``(seed, source)`` following flag > environment > spec file > default."""
    environ = os.environ if environ is None else environ
    if flag is not None:
        return _parse_seed(flag, "--seed"), "flag"
    if environ.get(SEED_ENV, "").strip():
        return _parse_seed(environ[SEED_ENV], SEED_ENV), "env"
    if spec_seed is not None:
        return spec_seed, "spec"
    return DEFAULT_SEED, "default"


def load_spec_file(path):
    """Parse a JSON or YAML experiment spec into a plain mapping."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise CliError(f"{path}: invalid YAML: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}") from None


def _estimator_config(args):
    policy = "error" if args.jitter is None else Jitter(scale=args.jitter)
    return EstimatorConfig(k=args.k, duplicate_policy=policy, backend=args.backend)


def cmd_test(args):
    data, _ = read_points_csv(args.data)
    n, m = data.shape
    if n <= m:
        raise CliError(f"need more observations than dimensions (N={n}, m={m})")
    seed, source = resolve_seed(args.seed)
    config = TestConfig(k=args.k, alpha=args.alpha, n_bootstrap=args.bootstrap, seed=seed,
                        estimator=_estimator_config(args))
    result = run_test(data, config)
    print(f"KL normality test  N={n}  m={m}  k={args.k}  B={args.bootstrap}")
    print(f"  seed            {seed} ({source})")
    print(f"  statistic T     {result.t_observed:.6f}")
    print(f"  critical value  {result.critical_value:.6f}  (alpha={args.alpha})")
    print(f"  p-value         {result.p_value:.4f}")
    print(f"  decision        {'reject' if result.reject else 'do not reject'} H0 (normality)")
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        out = Path(args.out) / f"{Path(args.data).stem}_test.json"
        out.write_text(json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        print(f"  report          {out}")
    return EXIT_REJECT if result.reject else EXIT_ACCEPT


def _experiment_spec(args, kind):
    if args.spec is not None:
        tree = load_spec_file(args.spec)
        spec = ExperimentSpec.from_dict(tree, kind=kind)
        spec_seed = spec.seed if "seed" in tree else None
    else:
        if kind is None:
            raise CliError("simulate needs a spec file")
        spec = preset_spec(kind, full_scale=args.full_scale)
        spec_seed = None
    seed, source = resolve_seed(args.seed, spec_seed)
    changes = {"seed": seed}
    if args.backend is not None:
        changes["backend"] = args.backend
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.bootstrap is not None:
        # for critical-value tables the simulated statistics are the bootstrap draws
        changes["replications" if spec.kind == "critical_values" else "bootstrap_b"] = args.bootstrap
    if getattr(args, "per_dataset_bootstrap", False):
        changes["per_dataset_bootstrap"] = True
    return spec.replace(**changes), source


def cmd_experiment(args, kind):
    spec, source = _experiment_spec(args, kind)

    def progress(done, total, cell):
        if args.verbose:
            print(f"  [{done}/{total}] {cell}", file=sys.stderr)

    report = run_experiment(spec, workers=args.workers, progress=progress)
    paths = report.write(args.out)
    print(f"{spec.kind} experiment '{spec.name}'  cells={len(report.cells)}  "
          f"seed={spec.seed} ({source})  wall={report.wall_time:.1f}s")
    for p in paths:
        print(f"  wrote {p}")
    return EXIT_ACCEPT


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be ≥ 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="klgof", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", default=None, help=f"master seed (overrides ${SEED_ENV})")
        p.add_argument("--backend", choices=["tree", "brute"], default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--bootstrap", type=_positive_int, default=None, metavar="B")

    t = sub.add_parser("test", help="test a CSV sample for multivariate normality")
    t.add_argument("data", help="CSV file, rows = observations")
    t.add_argument("--k", type=int, default=1)
    t.add_argument("--jitter", type=float, default=None, metavar="SCALE",
                   help="break duplicate points with uniform noise of this half-width")
    t.add_argument("--out", default=None, metavar="DIR")
    common(t)
    t.set_defaults(backend="tree", alpha=0.05, bootstrap=1000)

    for name, kind, help_ in [
        ("simulate", None, "run any experiment spec"),
        ("calibrate", "critical_values", "critical-value tables"),
        ("power", "power", "empirical power curves"),
        ("slopes", "slopes", "log-log convergence slopes"),
        ("diagnostics", "diagnostics", "standardized-statistic KDE and Q-Q data"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("spec", nargs=None if kind is None else "?", default=None,
                       help="JSON or YAML experiment spec")
        p.add_argument("--out", required=True, metavar="DIR")
        p.add_argument("--workers", type=_positive_int, default=1)
        p.add_argument("--full-scale", action="store_true", help="use the large full-scale grid")
        p.add_argument("--verbose", "-v", action="store_true")
        if kind in (None, "power"):
            p.add_argument("--per-dataset-bootstrap", action="store_true",
                           help="calibrate every replication with its own bootstrap")
        common(p)
        p.set_defaults(kind=kind)
    return parser


_HANDLED = (CliError, CsvFormatError, SpecError, DuplicatePoints, InvalidK, SingularCovariance,
            DimensionMismatch, ValueError, OSError)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_ACCEPT
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            if args.command == "test":
                return cmd_test(args)
            return cmd_experiment(args, args.kind)
    except _HANDLED as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

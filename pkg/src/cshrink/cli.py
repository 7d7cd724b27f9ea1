"""Command-line interface: ``cshrink <command> [options]``.

Exit codes: 0 success, 1 a verification row failed, 2 usage or input error.
"""
import argparse
import json
import sys

from . import cmatrix as cm
from . import harness, verify
from .errors import CShrinkError, ConfigParseError
from .estimators import JSON_KINDS, EstimatorSpec, estimate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="cshrink", description="Complex matrix shrinkage estimators and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a Monte Carlo risk experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify-stein", help="Monte Carlo check of the complex Stein identity")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify-stein-haff", help="Monte Carlo check of the complex Stein-Haff identity")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify-calculus", help="analytic eigen-derivatives against finite differences")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fd-step", type=float, default=1e-6)
    p.add_argument("--instances", type=int, default=50)

    p = sub.add_parser("estimate", help="apply an estimator to data given as JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--estimator", required=True, choices=JSON_KINDS)
    p.add_argument("--out", required=True)
    return parser


def _report(rows):
    print(verify.format_rows(rows))
    ok = verify.all_passed(rows)
    print("all rows passed" if ok else "some rows FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_simulate(args):
    config = harness.read_config_json(args.config)
    if args.workers < 1:
        raise ValueError("--workers must be at least 1")
    reports = harness.run_experiment(config, workers=args.workers)
    harness.write_report_csv(reports, args.out)
    for r in reports:
        print(f"{r.estimator_id}: risk {r.empirical_risk:.4f} +- {r.risk_se:.4f}, "
              f"ure {r.ure_mean:.4f} +- {r.ure_se:.4f}, baseline {r.baseline:g}, discarded {r.discarded}",
              file=sys.stderr)
    return EXIT_OK


def _matrix_field(obj, name, required=False):
    if name not in obj or obj[name] is None:
        if required:
            raise ConfigParseError("missing required field", field=name)
        return None
    try:
        return cm.from_json(obj[name])
    except CShrinkError as exc:
        raise ConfigParseError(str(exc), field=name) from exc


def _cmd_estimate(args):
    with open(args.input) as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, line=exc.lineno) from exc
    if not isinstance(obj, dict):
        raise ConfigParseError("top level must be a JSON object")
    z = _matrix_field(obj, "z", required=True)
    n = obj.get("n")
    if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
        raise ConfigParseError(f"expected an integer, got {n!r}", field="n")
    spec = EstimatorSpec(args.estimator)
    est = estimate(spec, z, s=_matrix_field(obj, "s"), sigma=_matrix_field(obj, "sigma"),
                   k=_matrix_field(obj, "k"), n=n)
    with open(args.out, "w") as fh:
        json.dump(cm.to_json(est), fh)
        fh.write("\n")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "verify-stein":
            return _report(verify.stein_suite(args.p, args.reps, args.seed))
        if args.command == "verify-stein-haff":
            return _report(verify.stein_haff_suite(args.p, args.n, args.reps, args.seed))
        if args.command == "verify-calculus":
            return _report(verify.calculus_suite(args.m, args.p, args.seed, args.instances, args.fd_step))
    except (CShrinkError, ValueError, TypeError, OSError) as exc:
        print(f"cshrink {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

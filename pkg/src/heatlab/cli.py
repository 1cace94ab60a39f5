"""Command-line interface: ``heatlab run | eval | spectrum``."""

from __future__ import annotations

import argparse
import json
import sys

from . import heat_kernel
from .errors import HeatlabError
from .experiments import SCENARIOS, parse_grid, run_scenario, to_json
from .spaces import parse_space, spectrum


def _point(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"points are JSON values, got {text!r}") from exc


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser():
    parser = argparse.ArgumentParser(prog="heatlab", description="Heat kernels on model spaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named scenario and write a JSON report")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--space", help="model-space expression, e.g. 'sphere(2,1.0)'")
    run.add_argument("--t-grid", help="lo:hi:n[log|lin]")
    run.add_argument("--tol", type=float, default=1e-8, help="IHKI threshold / tolerance")
    run.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE",
                     help="extra scenario parameter (repeatable), e.g. r=0.5")
    run.add_argument("--out", help="JSON report path (default: stdout)")
    run.add_argument("--csv", help="CSV path for the sampled grid")

    ev = sub.add_parser("eval", help="evaluate the heat kernel rho(x, y, t)")
    ev.add_argument("--space", required=True)
    ev.add_argument("--x", required=True, type=_point, help="JSON point")
    ev.add_argument("--y", required=True, type=_point, help="JSON point")
    ev.add_argument("--t", required=True, type=float)
    ev.add_argument("--tol", type=float, default=1e-10)

    sp = sub.add_parser("spectrum", help="print the Laplace spectrum")
    sp.add_argument("--space", required=True)
    sp.add_argument("--levels", type=int, default=5)
    return parser


def _cmd_run(args):
    params = dict(args.param)
    if args.space:
        params["space"] = args.space
    if args.t_grid:
        params["t_grid"] = parse_grid(args.t_grid)
    params.setdefault("threshold", args.tol)
    report = run_scenario(args.scenario, params, args.out, args.csv)
    report.pop("csv_text", None)
    if not args.out:
        print(to_json(report))
    else:
        print(f"{args.scenario}: {report['verdict']}")
    return 0 if report["verdict"] == "pass" else 1


def _cmd_eval(args):
    space = parse_space(args.space)
    kv = heat_kernel.evaluate(space, args.x, args.y, args.t, args.tol)
    out = {
        "space": str(space),
        "t": args.t,
        "value": kv.value,
        "cert": {
            "terms_used": kv.cert.terms_used,
            "tail_bound": kv.cert.tail_bound,
            "target_tol": kv.cert.target_tol,
        },
    }
    print(to_json(out))
    return 0


def _cmd_spectrum(args):
    space = parse_space(args.space)
    print("level\tmu\tmultiplicity")
    for lvl in spectrum(space, args.levels):
        print(f"{lvl.index}\t{lvl.mu:.17g}\t{lvl.multiplicity}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_spectrum(args)
    except HeatlabError as exc:
        print(f"heatlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"heatlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

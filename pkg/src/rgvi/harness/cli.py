"""Command line entry point ``rgvi``.

Exit codes: 0 success, 1 failed criterion (or failed fit), 2 configuration error.
"""

import argparse
import sys

from ..exceptions import ConfigError, InvalidInputError, TheoremViolationError
from ..problems import list_problems, make_instance
from .acceptance import CRITERIA, acceptance_suite
from .config import load_config
from .experiment import fit_rate, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _window(text):
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like a:b, got {text!r}") from None


def _criteria(text):
    try:
        nums = {int(s) for s in text.split(",") if s.strip()}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    unknown = nums - set(CRITERIA)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown criteria {sorted(unknown)}")
    return nums


def build_parser():
    parser = argparse.ArgumentParser(prog="rgvi", description="Reduced-gradient methods: "
                                     "experiments, rate fits and the acceptance suite.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and write its trace")
    p_run.add_argument("config", help="experiment config file")
    p_run.add_argument("--out-dir", default=None, help="directory for output files")

    p_fit = sub.add_parser("fit", help="fit a log-log slope to a trace column")
    p_fit.add_argument("trace", help="trace CSV written by `rgvi run`")
    p_fit.add_argument("--column", required=True)
    p_fit.add_argument("--window", required=True, type=_window, help="t range a:b")

    p_acc = sub.add_parser("accept", help="run the acceptance suite")
    p_acc.add_argument("--only", type=_criteria, default=None, help="e.g. 1,4,10")
    p_acc.add_argument("--json", default=None, help="also write the report as JSON")

    sub.add_parser("list-problems", help="list the problem zoo")
    return parser


def _cmd_run(args):
    cfg = load_config(args.config)
    traces, paths = run_experiment(cfg, out_dir=args.out_dir)
    for tr, path in zip(traces, paths):
        print(f"{path}: {tr.n_iter} iterations, stop={tr.stop_reason}")
    return EXIT_OK


def _cmd_fit(args):
    try:
        fit = fit_rate(args.trace, args.column, args.window)
    except (InvalidInputError, OSError) as exc:
        print(f"rgvi fit: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(fit)
    return EXIT_OK


def _cmd_accept(args):
    report = acceptance_suite(only=args.only, verbose=print)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    print("acceptance: " + ("PASS" if report.passed else "FAIL"))
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_list(args):
    for name, desc in list_problems():
        inst = make_instance(name)
        print(f"{name:26s} {inst.kind:3s} dim={inst.dim:<3d} {desc}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    handlers = {"run": _cmd_run, "fit": _cmd_fit, "accept": _cmd_accept, "list-problems": _cmd_list}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"rgvi: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"rgvi: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TheoremViolationError as exc:
        print(f"rgvi: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

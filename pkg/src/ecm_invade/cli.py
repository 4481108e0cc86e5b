"""Command-line entry points.

    ecm-invade run        --config cfg.yaml [--set key=value ...] [--out DIR]
    ecm-invade sweep      --config cfg.yaml --lambdas 1,100,10000 [...]
    ecm-invade crosscheck --config cfg.yaml [...]
    ecm-invade report     --run DIR [--out DIR]

Exit codes: 0 success, 1 solver failure, 2 usage or configuration error.
Progress goes to standard error; machine-readable output only to files.
The environment variable ECM_INVADE_THREADS caps sweep parallelism.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .driver import run_crosscheck, run_simulation, run_sweep
from .errors import (
    BoundsError,
    ConfigurationError,
    ConvergenceError,
    FrontNotFoundError,
    InsufficientDataError,
    StabilityError,
)
from .runio import load_config

log = logging.getLogger("ecm_invade")

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_USAGE = 2

_SOLVER_ERRORS = (StabilityError, ConvergenceError, BoundsError,
                  FrontNotFoundError, InsufficientDataError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecm-invade",
                                     description="cell/matrix invasion simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run configuration file")
            p.add_argument("--set", dest="overrides", action="append", default=[],
                           metavar="KEY=VALUE", help="override a config key (repeatable)")
        p.add_argument("--out", default=None, help="output directory (default: from config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    common(sub.add_parser("run", help="execute one simulation"))
    p_sweep = sub.add_parser("sweep", help="run once per degradation rate")
    common(p_sweep)
    p_sweep.add_argument("--lambdas", default="", metavar="CSV",
                         help="comma-separated degradation rates")
    common(sub.add_parser("crosscheck", help="compare both schemes as tau shrinks"))
    p_report = sub.add_parser("report", help="render figures for a finished run or sweep")
    common(p_report, needs_config=False)
    p_report.add_argument("--run", required=True, dest="run_dir",
                          help="directory holding run or sweep outputs")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config, overrides=args.overrides)
    result = run_simulation(cfg, out_root=args.out)
    log.info("outputs in %s", result.run_dir)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    lambdas = [float(v) for v in args.lambdas.split(",") if v.strip()]
    if not lambdas:
        log.error("sweep needs a non-empty --lambdas list")
        return EXIT_USAGE
    cfg = load_config(args.config, overrides=args.overrides)
    records, path = run_sweep(cfg, lambdas, out_root=args.out)
    failures = [r for r in records if "error" in r]
    for rec in failures:
        log.warning("lambda=%g failed: %s", rec["lambda"], rec["error"])
    log.info("sweep summary in %s", path)
    return EXIT_OK if len(failures) < len(records) else EXIT_SOLVER


def _cmd_crosscheck(args) -> int:
    cfg = load_config(args.config, overrides=args.overrides,
                      allow_both_scheme_blocks=True)
    report, monotone = run_crosscheck(cfg, out_root=args.out or cfg.output_dir)
    for tau, diff in zip(report["taus"], report["l2_differences"]):
        log.info("tau=%g  L2 difference %.6e", tau, diff)
    log.info("reduction ratios: %s", ", ".join(f"{r:.2f}" for r in report["reduction_ratios"]))
    return EXIT_OK if monotone else EXIT_SOLVER


def _cmd_report(args) -> int:
    from . import plots  # matplotlib import deferred to the report path

    for path in plots.render(args.run_dir, out_dir=args.out):
        log.info("wrote %s", path)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports its own message
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    handler = {"run": _cmd_run, "sweep": _cmd_sweep,
               "crosscheck": _cmd_crosscheck, "report": _cmd_report}[args.command]
    try:
        return handler(args)
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_USAGE
    except _SOLVER_ERRORS as exc:
        log.error("solver failure: %s: %s", type(exc).__name__, exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

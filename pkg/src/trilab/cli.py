"""Command line front end for the experiment harness."""

from __future__ import annotations

import argparse
import sys

from .harness import load_config, make_config, run_experiment

_HELP = {
    "kernel": "tabulate the reduced kernel, main term, and remainder",
    "critpts": "critical-point table over heights and detunings",
    "sweep": "Hermitian-form sweeps for both test-vector variants",
    "peakfit": "peak statistics and power-law fits over the heights",
    "boundchain": "constrained weight-profile maximization report",
    "all": "full pipeline: kernel, critpts, sweep, peakfit, boundchain",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="trilab",
        description="Oscillatory quadrature sweeps, peak scaling laws, "
                    "and weight-profile bound reports.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in _HELP.items():
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", metavar="PATH",
                         help="flat key = value configuration file")
        cmd.add_argument("--out", metavar="DIR",
                         help="output directory (default: out)")
        cmd.add_argument("--workers", type=int, metavar="N",
                         help="worker process count")
        cmd.add_argument("--tol", type=float, metavar="X",
                         help="quadrature tolerance")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        file_values = load_config(args.config) if args.config else {}
        overrides = {"command": args.command}
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.tol is not None:
            overrides["tol"] = args.tol
        cfg = make_config(file_values, **overrides)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())

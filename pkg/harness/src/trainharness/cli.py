"""Command-line front end: read a plan, run it, print the CSV path.

Exit codes: 0 success, 1 plan or argument problems, 2 measurement
failures, 3 file I/O problems. Progress and skip notices go to stderr
via logging; stdout carries only the output path.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import MeasurementError, PlanError
from .measure import measure, with_overrides
from .plan import load_plan


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="trainharness",
        description="Train tiny decoder-only transformers and record step times.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="run a measurement plan and write its CSV")
    p.add_argument("--plan", required=True, help="plan JSON path")
    p.add_argument("--out", default=None, help="output CSV path (overrides the plan)")
    p.add_argument(
        "--seconds",
        type=float,
        default=None,
        help="seconds per run (overrides the plan)",
    )
    p.add_argument("--device", default=None, help="torch device (overrides the plan)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        plan = load_plan(args.plan)
        plan = with_overrides(plan, seconds_per_run=args.seconds, device=args.device)
        path = measure(plan, out=args.out)
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MeasurementError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

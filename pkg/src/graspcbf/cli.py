"""Command line entry point.

Exit codes: 0 completed, 2 grasp failure, 3 infeasible QP, 4 config error,
1 other I/O or usage errors. ``GRASPCBF_LOG`` sets the log level
(e.g. ``DEBUG``, ``INFO``; default ``WARNING``).
"""

import argparse
import json
import logging
import os
import sys

from .config import canonical_config, load_config
from .errors import ConfigInvalid, GraspError
from .report import compare, emit, format_summary, read_table
from .simulation import run_scenario

EXIT = {"completed": 0, "grasp_failure": 2, "infeasible": 3}
EXIT_CONFIG = 4


def _load(path):
    return canonical_config() if path in (None, "canonical") else load_config(path)


def cmd_run(args):
    cfg = _load(args.config)
    mode = "nominal" if args.mode in ("nominal", "nominal_only") else "filtered"
    runlog = run_scenario(cfg, mode, duration=args.duration, progress=1000)
    paths = emit(runlog, args.out, figures=not args.no_figures)
    print(f"termination: {runlog.termination}")
    if runlog.message:
        print(f"reason: {runlog.message}")
    print(f"steps: {len(runlog)}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT[runlog.termination]


def cmd_compare(args):
    summary = compare(read_table(args.a), read_table(args.b))
    print(json.dumps(summary, indent=2) if args.json else format_summary(summary))
    return 0


def cmd_validate(args):
    cfg = _load(args.config)
    system, state, settings = cfg.build()
    print(f"{cfg.source}: ok ({system.n_contacts} contacts, {system.n_joints} joints, "
          f"dt={cfg.dt}, duration={cfg.duration}, families={','.join(cfg.families)})")
    return 0


EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as a grasp failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="graspcbf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate a scenario and write logs, plot data and figures")
    r.add_argument("--config", default=None, help="scenario TOML (default: canonical)")
    r.add_argument("--mode", choices=("nominal", "nominal_only", "filtered"), default="filtered")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--duration", type=float, default=None, help="override simulated time [s]")
    r.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("compare", help="compare two run tables")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_compare)
    v = sub.add_parser("validate", help="check that a scenario loads and builds")
    v.add_argument("--config", default=None)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("GRASPCBF_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GraspError as exc:
        if args.command == "validate":
            print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

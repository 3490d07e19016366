"""Command line entry point: ``pathspace run | validate | list``.

Exit codes: 0 when every mandatory check passes, 1 when one fails, 2 for an
unknown experiment or an invalid configuration.
"""

import argparse
import sys

from . import experiments
from .experiments import EXPERIMENTS, FIELDS

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _flag(key):
    return "--" + key.replace("_", "-")


def build_parser():
    parser = argparse.ArgumentParser(prog="pathspace", description="Path-space Monte Carlo experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("experiment", help="experiment name (see `pathspace list`)")
    run.add_argument("--config", help="flat key = value file; command-line flags win")
    for key in FIELDS:
        if key in ("experiment", "plot"):
            continue
        run.add_argument(_flag(key), dest=key, default=None, metavar=key.upper(),
                         help="comma-separated list" if FIELDS[key] is experiments._floats else None)
    run.add_argument("--plot", action="store_true", default=None, help="also write plot.svg")
    run.add_argument("--quiet", action="store_true", help="print only the verdict")

    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("--config", required=True)

    sub.add_parser("list", help="enumerate the experiments")
    return parser


def cmd_list(out=None):
    out = out or sys.stdout
    width = max(map(len, EXPERIMENTS))
    for name, exp in EXPERIMENTS.items():
        print(f"{name:<{width}}  {exp.description}", file=out)
    return EXIT_OK


def cmd_validate(path, out=None):
    out = out or sys.stdout
    try:
        raw = experiments.read_config_file(path)
    except (OSError, ValueError) as err:
        print(f"config: {err}", file=out)
        return EXIT_USAGE
    problems = experiments.validate(raw)
    for p in problems:
        print(p, file=out)
    if not problems:
        print("config OK", file=out)
    return EXIT_USAGE if problems else EXIT_OK


def cmd_run(args, out=None, err=None):
    out, err = out or sys.stdout, err or sys.stderr
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}; run `pathspace list`", file=err)
        return EXIT_USAGE
    raw = {}
    if args.config:
        try:
            raw = experiments.read_config_file(args.config)
        except (OSError, ValueError) as exc:
            print(f"config: {exc}", file=err)
            return EXIT_USAGE
        if raw.get("experiment", args.experiment) != args.experiment:
            print(f"config.experiment: {raw['experiment']!r} does not match {args.experiment!r}", file=err)
            return EXIT_USAGE
    overrides = {k: getattr(args, k) for k in FIELDS if k != "experiment"}
    try:
        cfg = experiments.resolve(args.experiment, raw, overrides)
    except ValueError as exc:
        for problem in str(exc).split("; "):
            print(problem, file=err)
        return EXIT_USAGE
    summary = experiments.run(cfg)
    if not args.quiet:
        for c in summary.checks:
            mark = "ok  " if c.passed else ("FAIL" if c.mandatory else "info")
            print(f"  [{mark}] {c.name}: {c.value:.6g} {c.detail}".rstrip(), file=out)
    print(f"{summary.experiment}: {summary.verdict} ({summary.wall_time:.1f} s) -> "
          f"{summary.artifacts[0].rsplit('/', 1)[0]}", file=out)
    return EXIT_OK if summary.passed else EXIT_FAIL


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list()
    if args.command == "validate":
        return cmd_validate(args.config)
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())

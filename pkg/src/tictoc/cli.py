"""Command line: ``tictoc generate | run | sweep | selftest``.

Exit status is 0 when every oracle verdict (or conformance check) passes,
1 when one fails and 2 for bad arguments or unreadable inputs.
"""
from __future__ import annotations

import argparse
import sys

from .core import load_config
from .harness import ExperimentPlan, format_report, run, sweep_mdc_size
from .traces import generate, load_trace_spec, read_trace, write_trace


def _sizes(text):
    try:
        sizes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return sizes


def build_parser():
    p = argparse.ArgumentParser(prog="tictoc", description="DRAM-cache bandwidth simulator")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic trace")
    g.add_argument("--spec", required=True, help="trace spec file (key = value)")
    g.add_argument("--out", required=True, help="trace file to write")

    r = sub.add_parser("run", help="simulate one config on one trace")
    r.add_argument("--config", required=True)
    r.add_argument("--trace", required=True)
    r.add_argument("--report", help="report path (default: stdout)")
    r.add_argument("--format", choices=("csv", "json"), default="csv")

    s = sub.add_parser("sweep", help="metadata-cache size sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--trace", required=True)
    s.add_argument("--sizes", type=_sizes, default=[128, 256, 512, 1024])
    s.add_argument("--report", help="report path (default: stdout)")
    s.add_argument("--format", choices=("csv", "json"), default="csv")

    sub.add_parser("selftest", help="run the micro-trace conformance suite")
    return p


def _emit(results, args):
    text = format_report(results, args.format)
    if args.report:
        with open(args.report, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r.verdict.passed for r in results) else 1


def cmd_generate(args):
    trace = generate(load_trace_spec(args.spec))
    write_trace(trace, args.out)
    print(f"wrote {len(trace)} accesses to {args.out}")
    return 0


def cmd_run(args):
    config = load_config(args.config)
    trace = read_trace(args.trace, config.memory_lines)
    return _emit(run(ExperimentPlan([(config, trace)])), args)


def cmd_sweep(args):
    config = load_config(args.config)
    trace = read_trace(args.trace, config.memory_lines)
    return _emit(sweep_mdc_size(config, trace, args.sizes), args)


def cmd_selftest(args):
    from .conformance import run_conformance

    checks = run_conformance()
    for c in checks:
        print(c)
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "selftest": cmd_selftest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError) as e:
        print(f"tictoc {args.command}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

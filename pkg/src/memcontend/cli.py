"""Command line entry point: ``memcontend run|calibrate|plot``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiment import SpecError, demo_names, load_spec, parse_size, replot, run_experiment, with_overrides
from .workload import TrafficPattern

log = logging.getLogger("memcontend")


def _cmd_run(args) -> int:
    spec = with_overrides(load_spec(args.spec), args.backend, args.seed, args.out)
    spec.jobs = args.jobs or spec.jobs
    result = run_experiment(spec)
    for note in result.notes:
        print(f"note: {note}", file=sys.stderr)
    for path in result.files.values():
        print(path)
    return 0


def _cmd_calibrate(args) -> int:
    from .hw import calibrate_max_rate, host_metadata, pin

    if args.core is not None:
        pin(args.core)
    rate = calibrate_max_rate(TrafficPattern(args.pattern.upper()), parse_size(args.fp),
                              parse_size(args.line_bytes), args.chase)
    out = {"pattern": args.pattern.upper(), "footprint_bytes": parse_size(args.fp),
           "chase": args.chase, "accesses_per_second": rate, "host": host_metadata()}
    print(json.dumps(out, indent=2))
    return 0


def _baseline(text: str):
    pattern, _, fp = text.partition(":")
    if not fp:
        raise argparse.ArgumentTypeError("expected PATTERN:FOOTPRINT, e.g. READ_MISS:4MiB")
    return TrafficPattern(pattern.upper()).value, parse_size(fp)


def _cmd_plot(args) -> int:
    for path in replot(args.csv, args.out, args.baseline):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memcontend", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment file (or demo:NAME)")
    run.add_argument("spec", help=f"INI file, or demo:NAME with NAME in {demo_names()}")
    run.add_argument("--backend", choices=["sim", "hw"])
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (overrides the file)")
    run.add_argument("--jobs", type=int, help="parallel simulator processes")
    run.set_defaults(func=_cmd_run)

    cal = sub.add_parser("calibrate", help="measure the unthrottled access rate on this host")
    cal.add_argument("pattern", choices=[t.value for t in TrafficPattern], type=str.upper)
    cal.add_argument("fp", help="footprint, e.g. 4MiB")
    cal.add_argument("--line-bytes", default="64")
    cal.add_argument("--chase", action="store_true")
    cal.add_argument("--core", type=int)
    cal.set_defaults(func=_cmd_calibrate)

    plot = sub.add_parser("plot", help="re-render SVG figures from a results CSV")
    plot.add_argument("csv")
    plot.add_argument("--out", help="output directory (default: next to the CSV)")
    plot.add_argument("--baseline", type=_baseline,
                      help="baseline task as PATTERN:FOOTPRINT (default: largest READ_MISS)")
    plot.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SpecError, ValueError, OSError, RuntimeError) as e:
        print(f"memcontend: error: {e}", file=sys.stderr)
        return 2

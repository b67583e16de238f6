"""Command line entry point.

    svcsim run CONFIG [--outdir D] [--schemes cgs,fgs,mgs] [--seed N]
    svcsim print-default-config
    svcsim report RUNDIR

Log verbosity is taken from ``SVCSIM_LOG`` (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from . import scenario
from .errors import ConfigError, InputError, TraceFormatError
from .svc_model import Scheme

LOG_ENV = "SVCSIM_LOG"


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _parse_schemes(text: str) -> tuple:
    try:
        return tuple(Scheme.parse(s.strip()) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _summary_lines(report: scenario.RunReport) -> list[str]:
    lines = [f"{'scheme':6}  {'psnr_db':>8}  {'decodable':>9}  {'mos':>3}  {'loss':>6}  {'delay_s':>7}"]
    for s, r in report.results.items():
        lines.append(f"{s.value:6}  {r.mean_psnr:8.2f}  {100 * r.decodable_ratio:8.1f}%  {r.mos:3d}  "
                     f"{r.loss_rate:6.3f}  {r.mean_delay:7.3f}")
    return lines


def cmd_run(args) -> int:
    cfg = scenario.load_config(args.config)
    changes = {}
    if args.schemes is not None:
        changes["schemes"] = args.schemes
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    outdir = Path(args.outdir) if args.outdir else Path("run-" + Path(args.config).stem)
    report = scenario.run_scenario(cfg, outdir)
    print("\n".join(_summary_lines(report)))
    print(f"outputs written to {outdir}")
    return 0


def cmd_print_default_config(args) -> int:
    sys.stdout.write(scenario.dump_config(scenario.ScenarioConfig()))
    return 0


def cmd_report(args) -> int:
    report = scenario.recompute_report(args.rundir)
    print("\n".join(_summary_lines(report)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svcsim", description="Adaptive SVC streaming simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write all traces and the report")
    r.add_argument("config", help="JSON scenario file (see print-default-config)")
    r.add_argument("--outdir", help="output directory (default: run-<config name>)")
    r.add_argument("--schemes", type=_parse_schemes, help="comma-separated subset of cgs,fgs,mgs")
    r.add_argument("--seed", type=int, help="override the trace seed")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("print-default-config", help="print the default scenario as JSON")
    d.set_defaults(func=cmd_print_default_config)

    rep = sub.add_parser("report", help="recompute the metrics of a finished run from its traces")
    rep.add_argument("rundir")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

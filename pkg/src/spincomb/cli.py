"""Command line entry point.

    spincomb run <scenario|path> [--out DIR] [--solver S] [--threads N]
    spincomb sweep <scenario|path> [--out DIR] [--threads N]
    spincomb sensitivity <scenario|path> [--shifts ...] [--out DIR] [--threads N]
    spincomb list-scenarios

Exit codes: 0 success, 2 configuration error, 3 numerical or validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .errors import ConfigError, SpinCombError
from .scenario import BUILTIN, SOLVERS, SweepSpec, resolve_scenario

OUTPUT_ENV = "SPINCOMB_OUTPUT_DIR"
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

log = logging.getLogger("spincomb")


def _outdir(args, scenario):
    if args.out:
        return Path(args.out)
    if scenario.out:
        return Path(scenario.out)
    return Path(os.environ.get(OUTPUT_ENV, "spincomb-out")) / scenario.name


def _threads(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("--threads must be at least 1")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="spincomb", description="Cavity coupled to a comb of broadened spin ensembles.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="built-in scenario name or path to a YAML/JSON file")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/<name> or ./spincomb-out/<name>)")
        sp.add_argument("--threads", type=_threads, default=1)

    run = sub.add_parser("run", help="run one scenario")
    common(run)
    run.add_argument("--solver", choices=SOLVERS)
    sweep = sub.add_parser("sweep", help="eigenmode maps versus comb detuning")
    common(sweep)
    sens = sub.add_parser("sensitivity", help="revival envelope versus hole displacement")
    common(sens)
    sens.add_argument("--shifts", type=float, nargs="+", help="fractional hole displacements (default from scenario)")
    sub.add_parser("list-scenarios", help="list built-in scenarios")
    return p


def _run(args):
    from .runner import run_scenario, run_sweep, sensitivity_study, write_sensitivity

    if args.command == "list-scenarios":
        for name, s in BUILTIN.items():
            print(f"{name:10s} {s.description}")
        return 0
    scenario = resolve_scenario(args.scenario)
    out = _outdir(args, scenario)
    if args.command == "run":
        report = run_scenario(scenario, out=out, solver=args.solver, threads=args.threads)
        print(f"wrote {len(report.files)} files to {out}")
        for key, val in sorted(report.deviations.items()):
            print(f"  max deviation {key}: {val:.3e}")
        if report.pulses:
            print(f"  pulses: {report.pulses['count']} ({report.pulses['count_above_barrier']} above e^-kappa t)")
        return 0
    if args.command == "sweep":
        s = scenario if scenario.sweep is not None else dataclasses.replace(scenario, sweep=SweepSpec())
        out.mkdir(parents=True, exist_ok=True)
        files = run_sweep(s, out, args.threads)
        print(f"wrote {', '.join(sorted(files.values()))} under {out}")
        return 0
    if args.command == "sensitivity":
        shifts = args.shifts or scenario.sensitivity_shifts
        if not shifts:
            raise ConfigError("no shifts given (use --shifts or sensitivity_shifts in the scenario)")
        rows = sensitivity_study(scenario, shifts, threads=args.threads)
        out.mkdir(parents=True, exist_ok=True)
        write_sensitivity(out / "sensitivity.csv", rows)
        for r in rows:
            print(f"  shift {r.shift:+.3f}: late envelope ratio {r.ratio:.4g}")
        return 0
    raise ConfigError(f"unknown command {args.command}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpinCombError as exc:
        where = getattr(exc, "stage", None)
        prefix = f"[{where}] " if where else ""
        print(f"error: {prefix}{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

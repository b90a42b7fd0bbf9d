"""Command-line front-end.

Subcommands:
  run <scenario.yaml>      simulate a scenario file, write trace/metrics
  preset <name>            simulate a built-in scenario (see --list)
  compare <files...>       run several scenarios on one signal, rank them
  bode <scenario.yaml>     export the closed-form frequency response grid
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._core import BACKEND
from .scenario import (PRESET_NAMES, ScenarioError, SimulationDiverged, compare,
                       export, load_scenario, preset, run)
from .steady_state import responses


def _out_paths(args, stem: str):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.csv) if args.csv else out_dir / f"{stem}.csv"
    metrics_path = Path(args.metrics) if args.metrics else out_dir / f"{stem}.metrics.yaml"
    return csv_path, metrics_path


def _run_and_export(scenario, args, stem: str) -> int:
    csv_path, metrics_path = _out_paths(args, stem)
    try:
        trace, metrics = run(scenario)
    except SimulationDiverged as exc:
        export(exc.trace, None, csv_path=csv_path)
        print(f"DIVERGED at t = {exc.time:.6g} s; partial trace in {csv_path}",
              file=sys.stderr)
        return 2
    export(trace, metrics, csv_path=csv_path, metrics_path=metrics_path)
    print(f"wrote {csv_path} ({len(trace)} rows) and {metrics_path}")
    for ev in metrics.events:
        settle = "unsettled" if ev.settling_s is None else f"{ev.settling_s * 1e3:.2f} ms"
        print(f"  event t={ev.t_event:.3f}s: e_y settles in {settle} "
              f"(band {ev.eps_y:.4g})")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="harmest",
        description="Harmonic amplitude/phase/frequency estimation scenarios",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} (backend: {BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p):
        p.add_argument("--out-dir", default=".", help="output directory (default: .)")
        p.add_argument("--csv", default=None, help="trace CSV path override")
        p.add_argument("--metrics", default=None, help="metrics summary path override")

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("scenario", help="YAML scenario file")
    add_output_flags(p_run)

    p_pre = sub.add_parser("preset", help="simulate a built-in scenario")
    p_pre.add_argument("name", nargs="?", help=f"one of {', '.join(PRESET_NAMES)}")
    p_pre.add_argument("--list", action="store_true", help="list preset names")
    add_output_flags(p_pre)

    p_cmp = sub.add_parser("compare", help="compare scenarios sharing one signal")
    p_cmp.add_argument("scenarios", nargs="+", help="YAML scenario files")
    add_output_flags(p_cmp)

    p_bode = sub.add_parser("bode", help="closed-form frequency-response grid")
    p_bode.add_argument("scenario", help="YAML scenario file (gains + frequency)")
    p_bode.add_argument("--harmonic", type=int, default=1,
                        help="1-based harmonic index (default 1)")
    p_bode.add_argument("--grid", default="0.5:1.5:50",
                        help="probe grid lo:hi:count, multiples of the harmonic "
                             "resonance (default 0.5:1.5:50)")
    add_output_flags(p_bode)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _run_and_export(load_scenario(args.scenario), args,
                                   Path(args.scenario).stem)
        if args.command == "preset":
            if args.list or args.name is None:
                print("\n".join(PRESET_NAMES))
                return 0
            return _run_and_export(preset(args.name), args, args.name)
        if args.command == "compare":
            result = compare([load_scenario(p) for p in args.scenarios])
            print(result.to_text())
            csv_path, _ = _out_paths(args, "comparison")
            csv_path.write_text(result.to_csv(), encoding="utf-8")
            print(f"wrote {csv_path}")
            return 0
        if args.command == "bode":
            return _bode(args)
    except (ScenarioError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _bode(args) -> int:
    scenario = load_scenario(args.scenario)
    i = args.harmonic - 1
    if not 0 <= i < scenario.harmonics.n:
        raise ScenarioError(f"--harmonic must be in [1, {scenario.harmonics.n}]")
    try:
        lo, hi, count = args.grid.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise ScenarioError(f"--grid must be lo:hi:count, got {args.grid!r}") from exc
    omega_hat = scenario.omega0 if scenario.fll_variant else scenario.fsched.omega_at(0.0)
    center = scenario.harmonics.as_array()[i] * omega_hat
    csv_path, _ = _out_paths(args, f"{Path(args.scenario).stem}.bode{args.harmonic}")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("omega,a_y,phi_y,a_q,phi_q,a_e,phi_e\n")
        for w in np.linspace(lo * center, hi * center, count):
            r = responses(scenario.harmonics, scenario.gains, omega_hat, float(w), i)
            fh.write(",".join(f"{v:.17g}" for v in
                              (r.omega, r.a_y, r.phi_y, r.a_q, r.phi_q, r.a_e, r.phi_e))
                     + "\n")
    print(f"wrote {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

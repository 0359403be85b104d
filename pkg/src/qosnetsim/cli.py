"""Command line front end.

Exactly one of ``--preset`` or ``--scenario`` selects what to run; every run
writes ``metrics.csv``, ``summary.csv``, ``stats.json``, and
``scenario.resolved.cfg`` into ``<out>/<run-name>/``.

Exit status: 0 on success, 1 when the simulation itself fails, 2 for bad
usage or configuration.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from .engine import SimulationError
from .scenario import (
    ScenarioError,
    list_presets,
    load_scenario_file,
    run_preset,
    run_scenario,
)
from .topology import TopologyError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qosnetsim",
        description="Discrete-event simulator for QoS scheduling experiments "
                    "on a small enterprise network.",
    )
    parser.add_argument("--preset", metavar="NAME",
                        help="run a built-in experiment (see --list-presets)")
    parser.add_argument("--scenario", metavar="FILE",
                        help="run a scenario configuration file")
    parser.add_argument("--list-presets", action="store_true",
                        help="print the preset names and exit")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="override the run seed")
    parser.add_argument("--duration", type=float, metavar="SECONDS",
                        help="override the simulated duration")
    parser.add_argument("--out", default="runs", metavar="DIR",
                        help="root directory for run outputs (default: runs)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="set one resolved-config value; repeatable")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in list_presets():
            print(name)
        return 0

    if bool(args.preset) == bool(args.scenario):
        parser.print_usage(sys.stderr)
        print("qosnetsim: exactly one of --preset or --scenario is required",
              file=sys.stderr)
        return 2

    try:
        if args.preset:
            run_dirs = run_preset(
                args.preset,
                args.out,
                seed=args.seed,
                duration_s=args.duration,
                overrides=args.override,
            )
        else:
            overrides = list(args.override)
            if args.seed is not None:
                overrides.append(f"run.seed={args.seed}")
            if args.duration is not None:
                overrides.append(f"run.duration_s={float(args.duration)!r}")
            scenario, doc = load_scenario_file(args.scenario, overrides)
            out_dir = os.path.join(args.out, scenario.name)
            run_dirs = [run_scenario(scenario, out_dir, doc)]
    except (ScenarioError, TopologyError) as exc:
        print(f"qosnetsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"qosnetsim: simulation error: {exc}", file=sys.stderr)
        return 1

    for run_dir in run_dirs:
        print(run_dir)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

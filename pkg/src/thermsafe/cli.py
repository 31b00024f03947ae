"""Command-line interface.

Subcommands
    simulate      run one scenario; write trajectory.csv + summary.json
    verify-gains  print the gain certificate for a scenario's controller
    compare       run several controllers on the same scenario and seed
    convergence   run a solver refinement study against an analytic case

All subcommands print a JSON document to stdout.  Exit codes: 0 success,
2 configuration/validation error, 3 numerical (solver) failure.  When the
``THERMSAFE_OUT_DIR`` environment variable is set it overrides ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from .certify import classify
from .control import Gains
from .scenario import (
    ScenarioError,
    load_config,
    run_compare,
    run_scenario,
    scenario_from_dict,
    write_trajectory,
)
from .solver import SolverError
from .studies import run_study

OUT_DIR_ENV = "THERMSAFE_OUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermsafe",
        description=(
            "Simulate and certify boundary-cooled battery-module thermal "
            "control under faults and cyber-attacks."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate",
        help="run one scenario and write trajectory.csv + summary.json",
    )
    sim.add_argument("--config", required=True,
                     help="scenario JSON path or builtin:<name>")
    sim.add_argument("--out", default=None,
                     help=f"output directory (overridden by ${OUT_DIR_ENV})")
    sim.add_argument("--seed", type=int, default=None,
                     help="replace the scenario's seed")
    sim.add_argument("--no-noise", action="store_true",
                     help="zero both process and measurement noise")

    ver = sub.add_parser(
        "verify-gains",
        help="certify the scenario's controller gains and print the result",
    )
    ver.add_argument("--config", required=True,
                     help="scenario JSON path or builtin:<name>")
    ver.add_argument("--search", action="store_true",
                     help="include the certificate-parameter search report")

    cmp_ = sub.add_parser(
        "compare",
        help="run several controllers on the identical scenario and seed",
    )
    cmp_.add_argument("--config", required=True,
                      help="scenario JSON path or builtin:<name>")
    cmp_.add_argument("--controllers", default="oc,stc,stsfc",
                      help="comma-separated controller names (default all)")
    cmp_.add_argument("--out", default=None,
                      help=f"output directory (overridden by ${OUT_DIR_ENV})")

    conv = sub.add_parser(
        "convergence",
        help="solver refinement study against an analytic solution",
    )
    conv.add_argument("--case", required=True, choices=("cosine", "uniform"))
    conv.add_argument("--levels", type=int, default=3,
                      help="number of refinement levels (default 3)")
    conv.add_argument("--scheme", default="crank-nicolson",
                      choices=("crank-nicolson", "backward-euler"))

    return parser


def _resolve_out(cli_out: Optional[str], required: bool) -> Optional[str]:
    env = os.environ.get(OUT_DIR_ENV)
    out = env if env else cli_out
    if required and not out:
        raise ScenarioError(
            f"no output directory: pass --out or set ${OUT_DIR_ENV}"
        )
    return out


def _load_scenario_with_overrides(args) -> "Scenario":
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "no_noise", False):
        cfg["noise"] = {"process_std": 0.0, "measurement_std": 0.0}
    return scenario_from_dict(cfg, source=args.config)


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_simulate(args) -> int:
    out = _resolve_out(args.out, required=True)
    scenario = _load_scenario_with_overrides(args)
    traj, cert, report = run_scenario(scenario)
    paths = write_trajectory(
        traj, out, certificate=cert.to_dict(), monitor_report=report.to_dict()
    )
    _emit({
        "out_dir": str(out),
        "trajectory": str(paths["trajectory"]),
        "summary": str(paths["summary"]),
        "classification": cert.classification,
        "max_temperature_k": traj.max_temperature(),
        "first_unsafe_time_s": traj.first_crossing_time(),
        "flags": list(scenario.flags),
    })
    return EXIT_OK


def _cmd_verify_gains(args) -> int:
    scenario = _load_scenario_with_overrides(args)
    gains = (Gains.zeros() if scenario.controller.name == "oc"
             else scenario.controller.gains)
    cert = classify(gains, scenario.params)
    doc = cert.to_dict()
    if not args.search:
        doc.pop("search", None)
    doc["controller"] = scenario.controller.name
    _emit(doc)
    return EXIT_OK


def _cmd_compare(args) -> int:
    out = _resolve_out(args.out, required=True)
    scenario = _load_scenario_with_overrides(args)
    names = [c.strip() for c in args.controllers.split(",") if c.strip()]
    result = run_compare(scenario, names, out_dir=out)
    _emit(result["comparison"])
    return EXIT_OK


def _cmd_convergence(args) -> int:
    _emit(run_study(args.case, args.levels, args.scheme))
    return EXIT_OK


_DISPATCH = {
    "simulate": _cmd_simulate,
    "verify-gains": _cmd_verify_gains,
    "compare": _cmd_compare,
    "convergence": _cmd_convergence,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

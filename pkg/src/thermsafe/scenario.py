"""Scenario configuration, profile ingestion, persistence, and comparison.

A scenario is a JSON document validated against the packaged schema
(``data/scenario.schema.json``; unknown keys are rejected, errors name the
offending field).  ``builtin:<name>`` references resolve to packaged data
files, e.g. ``builtin:nominal`` for a config and ``builtin:udds`` for the
shipped drive-cycle current profile.

Persistence writes one run as ``trajectory.csv`` plus ``summary.json``;
floats are serialized with ``repr`` so re-reading is bit-exact and the same
inputs always produce byte-identical files.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import jsonschema
import numpy as np

from .anomalies import AttackSpec, FaultSpec, SocState
from .certify import classify
from .control import CONTROLLER_NAMES, ControllerKind, Gains
from .defaults import DEFAULT_GAINS, SCENARIO_DEFAULTS
from .functionals import eval_functionals, monitor_trajectory
from .grid import Grid, PhysicalParams, build_grid
from .solver import SolverConfig, SolverError, simulate
from .trajectory import Trajectory

__all__ = [
    "CurrentProfile",
    "Scenario",
    "ScenarioError",
    "load_config",
    "load_current_profile",
    "load_scenario",
    "read_trajectory_csv",
    "run_compare",
    "run_scenario",
    "scenario_from_dict",
    "write_trajectory",
]


class ScenarioError(ValueError):
    """Configuration, profile, or persistence validation failure."""


def _builtin_data(filename: str):
    return resources.files("thermsafe").joinpath("data", filename)


@dataclass
class CurrentProfile:
    """Piecewise-linear demand current I(t).

    Queries outside the covered time range hold the end values and bump
    ``hold_queries`` so the hold rule is visible in run metadata.
    """

    times: np.ndarray
    currents: np.ndarray
    source: str = "<arrays>"
    hold_queries: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.currents = np.asarray(self.currents, dtype=float)
        if self.times.ndim != 1 or self.times.size < 1:
            raise ScenarioError(f"{self.source}: profile needs at least one row")
        if self.times.shape != self.currents.shape:
            raise ScenarioError(f"{self.source}: time/current column length mismatch")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.currents))):
            raise ScenarioError(f"{self.source}: profile contains non-finite values")
        if np.any(np.diff(self.times) <= 0):
            raise ScenarioError(f"{self.source}: time_s must be strictly increasing")

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def covers(self, horizon: float) -> bool:
        return self.duration >= horizon

    def __call__(self, t: float) -> float:
        if t < self.times[0] or t > self.times[-1]:
            self.hold_queries += 1
        return float(np.interp(t, self.times, self.currents))

    def copy(self) -> "CurrentProfile":
        return CurrentProfile(self.times.copy(), self.currents.copy(), self.source)


def load_current_profile(ref: Union[str, Path]) -> CurrentProfile:
    """Load a two-column CSV (header ``time_s,current_A``, monotone time).

    ``builtin:<name>`` resolves to the packaged ``<name>_current.csv``.
    """
    ref_str = str(ref)
    if ref_str.startswith("builtin:"):
        handle = _builtin_data(f"{ref_str[len('builtin:'):]}_current.csv")
        if not handle.is_file():
            raise ScenarioError(f"unknown builtin profile {ref_str!r}")
        text = handle.read_text()
    else:
        path = Path(ref_str)
        if not path.is_file():
            raise ScenarioError(f"current profile not found: {path}")
        text = path.read_text()

    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ScenarioError(f"{ref_str}: empty profile")
    header = [c.strip() for c in lines[0].split(",")]
    if header != ["time_s", "current_A"]:
        raise ScenarioError(
            f"{ref_str}: header must be 'time_s,current_A', got {lines[0]!r}"
        )
    times, currents = [], []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != 2:
            raise ScenarioError(f"{ref_str}: row {i}: expected 2 cells, got {len(cells)}")
        try:
            times.append(float(cells[0]))
            currents.append(float(cells[1]))
        except ValueError as exc:
            raise ScenarioError(f"{ref_str}: row {i}: non-numeric cell ({exc})") from exc
    return CurrentProfile(np.array(times), np.array(currents), source=ref_str)


@dataclass
class Scenario:
    """A fully-resolved, validated run description."""

    params: PhysicalParams
    grid: Grid
    solver: SolverConfig
    controller: ControllerKind
    anomaly: Optional[object]  # None | FaultSpec | AttackSpec
    profile: CurrentProfile
    horizon: float
    seed: int
    measurement_noise_std: float
    battery: SocState
    name: str = ""
    resolved: dict = dc_field(default_factory=dict)
    flags: List[str] = dc_field(default_factory=list)

    @property
    def scenario_hash(self) -> str:
        blob = json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def n_steps(self) -> int:
        ratio = self.horizon / self.solver.dt
        return int(round(ratio))


@lru_cache(maxsize=1)
def _schema() -> dict:
    return json.loads(_builtin_data("scenario.schema.json").read_text())


def _merge_defaults(cfg: dict) -> dict:
    out = copy.deepcopy(cfg)
    for key, default in SCENARIO_DEFAULTS.items():
        if key not in out:
            out[key] = copy.deepcopy(default)
        elif isinstance(default, dict):
            for sub, val in default.items():
                out[key].setdefault(sub, copy.deepcopy(val))
    ctrl = out["controller"]
    if "gains" not in ctrl:
        ctrl["gains"] = asdict(DEFAULT_GAINS[ctrl["name"]])
    return out


def scenario_from_dict(cfg: dict, source: str = "<dict>") -> Scenario:
    """Validate a config mapping and build the Scenario it describes."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        parts = []
        for err in errors[:5]:
            loc = ".".join(str(p) for p in err.absolute_path) or "<root>"
            parts.append(f"{loc}: {err.message}")
        raise ScenarioError(f"{source}: invalid config: " + "; ".join(parts))

    full = _merge_defaults(cfg)

    params_cfg = {k: v for k, v in full["params"].items() if k != "provenance"}
    params = PhysicalParams(**params_cfg)
    grid = build_grid(full["grid"]["n_nodes"], params.length)

    noise = full["noise"]
    solver = SolverConfig(
        scheme=full["solver"]["scheme"],
        dt=full["solver"]["dt"],
        process_noise_std=noise["process_std"],
    )

    ctrl = full["controller"]
    limits = ctrl.get("coolant_limits")
    controller = ControllerKind(
        name=ctrl["name"],
        gains=Gains(**ctrl["gains"]),
        mode=ctrl["mode"],
        filter_tau=ctrl["filter_tau"],
        coolant_limits=None if limits is None else (limits[0], limits[1]),
    )

    anomaly_cfg = full["anomaly"]
    anomaly: Optional[object]
    if anomaly_cfg["kind"] == "none":
        anomaly = None
    elif anomaly_cfg["kind"] == "fault":
        anomaly = FaultSpec(
            onset=anomaly_cfg["onset"],
            magnitude=anomaly_cfg["magnitude"],
            location_center=anomaly_cfg["location_center"],
            location_width=anomaly_cfg["location_width"],
        )
    else:
        anomaly = AttackSpec(
            onset=anomaly_cfg["onset"],
            drain_current=anomaly_cfg["drain_current"],
            overdischarge_heat_gain=anomaly_cfg["overdischarge_heat_gain"],
            multiplier=anomaly_cfg.get("multiplier", 1.0),
        )

    profile = load_current_profile(full["current_profile"])
    horizon = full["horizon"]

    ratio = horizon / solver.dt
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, abs(ratio)) or round(ratio) < 1:
        raise ScenarioError(
            f"{source}: horizon ({horizon}) must be a positive multiple of "
            f"solver.dt ({solver.dt})"
        )

    flags: List[str] = []
    if not profile.covers(horizon):
        flags.append(
            f"current profile ends at {profile.duration:g} s, before the "
            f"{horizon:g} s horizon; final value is held"
        )
    if (
        controller.mode == "measured"
        and controller.filter_tau == 0.0
        and (controller.gains.mu2 != 0.0 or controller.gains.beta2 != 0.0)
        and controller.name != "oc"
    ):
        flags.append(
            "unfiltered boundary-rate feedback (filter_tau = 0 with nonzero "
            "rate gains) amplifies step-to-step noise and can diverge as dt "
            "shrinks; set filter_tau > 0 or use proof-exact mode"
        )

    battery_cfg = full["battery"]
    battery = SocState(
        soc=battery_cfg["initial_soc"],
        capacity=battery_cfg["capacity_ah"],
        initial_soc=battery_cfg["initial_soc"],
    )

    return Scenario(
        params=params,
        grid=grid,
        solver=solver,
        controller=controller,
        anomaly=anomaly,
        profile=profile,
        horizon=horizon,
        seed=full["seed"],
        measurement_noise_std=noise["measurement_std"],
        battery=battery,
        name=full.get("name", ""),
        resolved=full,
        flags=flags,
    )


def load_config(path: Union[str, Path]) -> dict:
    """Read a scenario JSON file (or ``builtin:<name>``) into a raw dict.

    No validation happens here; pass the result to ``scenario_from_dict``
    (possibly after applying overrides such as a replacement seed).
    """
    ref = str(path)
    if ref.startswith("builtin:"):
        handle = _builtin_data(f"{ref[len('builtin:'):]}.json")
        if not handle.is_file():
            raise ScenarioError(f"unknown builtin scenario {ref!r}")
        text = handle.read_text()
    else:
        p = Path(ref)
        if not p.is_file():
            raise ScenarioError(f"scenario file not found: {p}")
        text = p.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{ref}: not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ScenarioError(f"{ref}: top level must be a JSON object")
    return cfg


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load and validate a scenario JSON file (or ``builtin:<name>``)."""
    return scenario_from_dict(load_config(path), source=str(path))


# --- persistence -------------------------------------------------------------


def _csv_header(n_nodes: int) -> List[str]:
    return (
        ["t"]
        + [f"h_{i}" for i in range(n_nodes)]
        + ["T_c1", "T_c2", "soc", "norm_D", "norm_u",
           "E", "B", "dist", "V", "agmon_max"]
    )


def _summary_metrics(traj: Trajectory) -> dict:
    return {
        "max_temperature_k": traj.max_temperature(),
        "max_error_k": float(traj.fields.max()),
        "min_coolant_k": traj.min_coolant(),
        "first_unsafe_time_s": traj.first_crossing_time(),
        "final_soc": float(traj.soc[-1]),
        "soc_zero_crossing_s": traj.soc_zero_crossing(),
        "final_time_s": float(traj.times[-1]),
        "n_samples": traj.n_samples,
    }


def write_trajectory(
    traj: Trajectory,
    out_dir: Union[str, Path],
    *,
    certificate: Optional[dict] = None,
    monitor_report: Optional[dict] = None,
) -> Dict[str, Path]:
    """Write ``trajectory.csv`` and ``summary.json`` under ``out_dir``.

    Floats go through ``repr`` (shortest round-trip form), so identical
    inputs yield byte-identical files and readers recover exact values.
    """
    out = Path(out_dir)
    csv_path = out / "trajectory.csv"
    json_path = out / "summary.json"
    try:
        out.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="\n") as fh:
            fh.write(",".join(_csv_header(traj.grid.n_nodes)) + "\n")
            for i in range(traj.n_samples):
                row = (
                    [traj.times[i]]
                    + list(traj.fields[i])
                    + [traj.coolant[i, 0], traj.coolant[i, 1], traj.soc[i],
                       traj.norm_d[i], traj.norm_u[i], traj.energy_e[i],
                       traj.barrier_b[i], traj.dist_unsafe[i],
                       traj.lyap_v[i], traj.agmon_max[i]]
                )
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        summary = {
            "metadata": traj.metadata,
            "metrics": _summary_metrics(traj),
            "certificate": certificate,
            "monitor": monitor_report,
        }
        with json_path.open("w", newline="\n") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ScenarioError(f"cannot write run outputs under {out}: {exc}") from exc
    return {"trajectory": csv_path, "summary": json_path}


def read_trajectory_csv(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read a trajectory.csv back into arrays.

    Returns a dict with every scalar column by name plus ``fields`` as an
    (S, n_nodes) matrix.
    """
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise ScenarioError(f"{path}: column count mismatch with header")
    cols = {name: data[:, j] for j, name in enumerate(header)}
    h_names = [name for name in header if name.startswith("h_")]
    out: Dict[str, np.ndarray] = {
        name: cols[name] for name in header if not name.startswith("h_")
    }
    out["fields"] = np.column_stack([cols[name] for name in h_names])
    return out


# --- single-run and comparison harnesses ---------------------------------------


def run_scenario(scenario: Scenario):
    """Simulate one scenario with its gain certificate and monitor report.

    Certifies the effective gains (zero for the open loop), runs the closed
    loop, embeds the certificate in the trajectory metadata, and evaluates
    the along-trajectory inequality monitors.  Solver failures propagate.
    Returns ``(trajectory, certificate, monitor_report)``.
    """
    eff_gains = (Gains.zeros() if scenario.controller.name == "oc"
                 else scenario.controller.gains)
    cert = classify(eff_gains, scenario.params)
    traj = simulate(scenario)
    traj.metadata["certificate"] = cert.to_dict()
    report = monitor_trajectory(traj, cert.constants)
    return traj, cert, report


def _controller_variant(scenario: Scenario, name: str) -> ControllerKind:
    base = scenario.controller
    if base.name == name:
        return base
    return ControllerKind(
        name=name,
        gains=DEFAULT_GAINS[name],
        mode=base.mode,
        filter_tau=base.filter_tau,
        coolant_limits=base.coolant_limits,
    )


def _scenario_with_controller(scenario: Scenario, kind: ControllerKind) -> Scenario:
    resolved = copy.deepcopy(scenario.resolved)
    resolved["controller"] = {
        "name": kind.name,
        "mode": kind.mode,
        "filter_tau": kind.filter_tau,
        "gains": asdict(kind.gains),
    }
    if kind.coolant_limits is not None:
        resolved["controller"]["coolant_limits"] = list(kind.coolant_limits)
    return Scenario(
        params=scenario.params,
        grid=scenario.grid,
        solver=scenario.solver,
        controller=kind,
        anomaly=scenario.anomaly,
        profile=scenario.profile.copy(),
        horizon=scenario.horizon,
        seed=scenario.seed,
        measurement_noise_std=scenario.measurement_noise_std,
        battery=scenario.battery,
        name=scenario.name,
        resolved=resolved,
        flags=list(scenario.flags),
    )


def run_compare(
    scenario: Scenario,
    controllers: Sequence[str],
    out_dir: Optional[Union[str, Path]] = None,
) -> dict:
    """Run each controller on the identical scenario and seed.

    Noise streams are derived from the seed alone (not the controller), so
    every run sees the same realizations and the comparison is paired.
    Per-run failures are recorded without aborting the remaining runs.
    Returns ``{"order", "runs", "comparison"}``; with ``out_dir`` set, also
    writes ``<out>/<name>/trajectory.csv|summary.json`` and
    ``<out>/comparison.json``.
    """
    if not controllers:
        raise ScenarioError("controllers list must be nonempty")
    for name in controllers:
        if name not in CONTROLLER_NAMES:
            raise ScenarioError(
                f"unknown controller {name!r}; choose from {CONTROLLER_NAMES}"
            )

    runs: Dict[str, dict] = {}
    table: Dict[str, dict] = {}
    for name in controllers:
        kind = _controller_variant(scenario, name)
        variant = _scenario_with_controller(scenario, kind)
        try:
            traj, cert, report = run_scenario(variant)
        except SolverError as exc:
            eff_gains = Gains.zeros() if name == "oc" else kind.gains
            cert = classify(eff_gains, scenario.params)
            runs[name] = {"status": "failed", "error": str(exc)}
            table[name] = {"status": "failed", "error": str(exc),
                           "classification": cert.classification}
            continue
        row = {
            "status": "ok",
            "classification": cert.classification,
            "max_temperature_k": traj.max_temperature(),
            "first_unsafe_time_s": traj.first_crossing_time(),
            "min_coolant_k": traj.min_coolant(),
            "soc_zero_crossing_s": traj.soc_zero_crossing(),
            "monitor_fractions": {
                "condition2": report.condition2_fraction,
                "vcond2": report.vcond2_fraction,
            },
        }
        runs[name] = {
            "status": "ok",
            "trajectory": traj,
            "certificate": cert,
            "monitor": report,
            "summary": row,
        }
        table[name] = row

    comparison = {
        "scenario": {
            "name": scenario.name,
            "seed": scenario.seed,
            "hash": scenario.scenario_hash,
            "anomaly": scenario.resolved.get("anomaly"),
            "horizon": scenario.horizon,
        },
        "controllers": list(controllers),
        "summary": table,
    }

    if out_dir is not None:
        out = Path(out_dir)
        for name in controllers:
            run = runs[name]
            if run["status"] != "ok":
                continue
            write_trajectory(
                run["trajectory"],
                out / name,
                certificate=run["certificate"].to_dict(),
                monitor_report=run["monitor"].to_dict(),
            )
        try:
            out.mkdir(parents=True, exist_ok=True)
            with (out / "comparison.json").open("w", newline="\n") as fh:
                json.dump(comparison, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise ScenarioError(f"cannot write comparison under {out}: {exc}") from exc

    return {"order": list(controllers), "runs": runs, "comparison": comparison}

"""Implicit method-of-lines stepper for the closed-loop error PDE.

Semi-discrete form after second-order ghost-node elimination of the cooling
boundary conditions:

    M dh/dt = A h + S(t) + b(t)

* interior rows of A are the standard central second-difference;
* boundary rows absorb the convective condition
      h_x(0) = k [ (1 - mu1) h(0) - mu2 h_t(0) - mu3 h(m) - u1_cmd ]
  (and its mirror at x = L), so the proportional and midpoint gains land in
  A — one extra column entry per boundary row — while the rate gains land in
  the mass matrix M (diagonal, M != I only in the two boundary rows);
* explicit coolant commands u1_cmd, u2_cmd enter as the forcing b with
  coefficient 2 alpha k / dx (the "measured" controller mode assembles the
  operator with zero gains and supplies commands per step; the "proof-exact"
  mode folds the gains into M and A and supplies zero commands).

Time stepping is the theta scheme

    (M - theta dt A) h^{n+1} = (M + (1-theta) dt A) h^n + dt (S + b)

with theta = 1/2 (crank-nicolson, default) or 1 (backward-euler).  Sources
are expected evaluated at the scheme's quadrature time (midpoint for
Crank-Nicolson); commands are zero-order-held over the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .anomalies import AttackSpec, FaultSpec, attack_effects, fault_field, nominal_heat, update_soc
from .control import Gains, control_commands, coolant_temperature, measure
from .functionals import eval_functionals, lyapunov_weights
from .grid import Field, Grid, PhysicalParams, l2_norm
from .trajectory import Trajectory

__all__ = [
    "SolverError",
    "SolverConfig",
    "StepInputs",
    "StepOperator",
    "assemble_system",
    "step",
    "simulate",
]

THETA = {"crank-nicolson": 0.5, "backward-euler": 1.0}
COND_LIMIT = 1e12


class SolverError(RuntimeError):
    """Numerical failure: singular/ill-conditioned operator or blow-up."""


@dataclass(frozen=True)
class SolverConfig:
    """Stepping options carried by a scenario."""

    scheme: str = "crank-nicolson"
    dt: float = 0.1
    process_noise_std: float = 0.0

    def __post_init__(self):
        if self.scheme not in THETA:
            raise ValueError(
                f"scheme must be one of {sorted(THETA)}, got {self.scheme!r}"
            )
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.process_noise_std < 0:
            raise ValueError(
                f"process_noise_std must be >= 0, got {self.process_noise_std}"
            )


@dataclass
class StepInputs:
    """Per-step in-domain sources (K/s per node) and coolant commands (K)."""

    u_field: np.ndarray
    d_field: np.ndarray
    coolant_cmd: Tuple[float, float] = (0.0, 0.0)


@dataclass
class StepOperator:
    """Factored theta-scheme operator for one (grid, gains, dt, scheme)."""

    grid: Grid
    params: PhysicalParams
    gains: Gains
    scheme: str
    dt: float
    lhs: sp.csc_matrix
    rhs: sp.csr_matrix
    bcoef: float
    condition_estimate: float
    _lu: spla.SuperLU = dc_field(repr=False, default=None)

    @property
    def theta(self) -> float:
        return THETA[self.scheme]

    def solve(self, rhs_vec: np.ndarray) -> np.ndarray:
        return self._lu.solve(rhs_vec)


def assemble_system(
    params: PhysicalParams,
    gains: Gains,
    grid: Grid,
    dt: float,
    scheme: str = "crank-nicolson",
) -> StepOperator:
    """Assemble and factor the implicit step operator.

    Raises SolverError when the assembled matrix is singular or its 1-norm
    condition estimate exceeds 1e12.
    """
    if scheme not in THETA:
        raise ValueError(f"scheme must be one of {sorted(THETA)}, got {scheme!r}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    theta = THETA[scheme]
    n, dx, m = grid.n_nodes, grid.dx, grid.mid_index
    r = params.alpha / dx**2
    b = 2.0 * params.alpha * params.k_bc / dx

    A = sp.lil_matrix((n, n))
    for i in range(1, n - 1):
        A[i, i - 1] = r
        A[i, i] = -2.0 * r
        A[i, i + 1] = r
    A[0, 0] = -2.0 * r - b * (1.0 - gains.mu1)
    A[0, 1] = 2.0 * r
    A[0, m] += b * gains.mu3
    A[n - 1, n - 1] = -2.0 * r - b * (1.0 - gains.beta1)
    A[n - 1, n - 2] = 2.0 * r
    A[n - 1, m] += b * gains.beta3

    M = sp.identity(n, format="lil")
    M[0, 0] = 1.0 - b * gains.mu2
    M[n - 1, n - 1] = 1.0 - b * gains.beta2

    lhs = (M - theta * dt * A).tocsc()
    rhs = (M + (1.0 - theta) * dt * A).tocsr()

    try:
        lu = spla.splu(lhs)
    except RuntimeError as exc:  # exactly singular factorization
        raise SolverError(
            f"singular step matrix (condition estimate inf): {exc}"
        ) from exc

    inv_op = spla.LinearOperator(
        (n, n),
        matvec=lambda v: lu.solve(v),
        rmatvec=lambda v: lu.solve(v, trans="T"),
    )
    with np.errstate(over="ignore", invalid="ignore"):
        inv_norm = spla.onenormest(inv_op)
        cond = float(np.abs(lhs).sum(axis=0).max() * inv_norm)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SolverError(
            f"near-singular step matrix, condition estimate {cond:.3e} "
            f"exceeds {COND_LIMIT:.0e}"
        )

    return StepOperator(
        grid=grid, params=params, gains=gains, scheme=scheme, dt=dt,
        lhs=lhs, rhs=rhs, bcoef=b, condition_estimate=cond, _lu=lu,
    )


def step(
    op: StepOperator,
    field: Field,
    inputs: StepInputs,
    rng: Optional[np.random.Generator] = None,
    process_noise_std: float = 0.0,
) -> Field:
    """Advance one step.  Raises SolverError (time-stamped) on non-finite data."""
    dt = op.dt
    t_new = field.time + dt
    src = np.asarray(inputs.u_field, dtype=float) + np.asarray(
        inputs.d_field, dtype=float
    )
    if process_noise_std > 0.0 and rng is not None:
        src = src + rng.normal(0.0, 1.0, op.grid.n_nodes) * process_noise_std
    if not np.all(np.isfinite(src)):
        raise SolverError(f"non-finite source term at t={field.time:g}")

    rhs_vec = op.rhs @ field.values + dt * src
    u1, u2 = inputs.coolant_cmd
    rhs_vec[0] += dt * op.bcoef * u1
    rhs_vec[-1] += dt * op.bcoef * u2
    h_new = op.solve(rhs_vec)
    if not np.all(np.isfinite(h_new)):
        raise SolverError(f"solution became non-finite at t={t_new:g}")
    return Field(h_new, t_new, op.grid)


def simulate(scenario) -> Trajectory:
    """Run the closed loop described by a Scenario over its horizon.

    The trajectory is sampled every step; row 0 is the initial state h = 0.
    Noise comes from two independent substreams of the scenario seed — one
    for process noise, one for measurements — derived without reference to
    the controller, so runs differing only in controller see identical
    realizations (paired comparisons).

    The "measured" mode assembles the plant with zero gains and feeds
    commands computed from (noisy) sensor samples; "proof-exact" folds the
    gains into the step operator and records the commands the in-matrix law
    implies at the scheme's quadrature point.  Solver failures propagate
    with their time stamp; the metadata records the first sample time at
    which max |h| exceeds h_max, if any.
    """
    p: PhysicalParams = scenario.params
    g: Grid = scenario.grid
    cfg: SolverConfig = scenario.solver
    kind = scenario.controller
    dt = cfg.dt

    ratio = scenario.horizon / dt
    n_steps = int(round(ratio))
    if abs(ratio - n_steps) > 1e-9 * max(1.0, abs(ratio)) or n_steps < 1:
        raise ValueError(
            f"horizon ({scenario.horizon}) must be a positive multiple of dt ({dt})"
        )

    eff_gains = Gains.zeros() if kind.name == "oc" else kind.gains
    proof_exact = kind.mode == "proof-exact" and kind.name != "oc"
    op = assemble_system(p, eff_gains if proof_exact else Gains.zeros(), g, dt, cfg.scheme)
    theta = op.theta

    process_rng = np.random.default_rng(np.random.SeedSequence([scenario.seed, 1]))
    measure_rng = np.random.default_rng(np.random.SeedSequence([scenario.seed, 2]))
    beta4, beta5 = lyapunov_weights(eff_gains, p)

    anomaly = scenario.anomaly
    profile = scenario.profile
    n = g.n_nodes

    def signals_at(t: float, soc_state):
        """(total demand current, input heat field, anomaly heat field) at t."""
        i_nom = profile(t)
        u_vals = np.full(n, nominal_heat(i_nom, p))
        if isinstance(anomaly, AttackSpec):
            total_i, extra = attack_effects(anomaly, i_nom, soc_state, t, p)
            d_vals = np.full(n, extra)
        elif isinstance(anomaly, FaultSpec):
            total_i = i_nom
            d_vals = fault_field(anomaly, t, g).values
        else:
            total_i = i_nom
            d_vals = np.zeros(n)
        return total_i, u_vals, d_vals

    times = dt * np.arange(n_steps + 1)
    fields = np.zeros((n_steps + 1, n))
    coolant = np.zeros((n_steps + 1, 2))
    soc_arr = np.zeros(n_steps + 1)
    norm_d = np.zeros(n_steps + 1)
    norm_u = np.zeros(n_steps + 1)
    energy_e = np.zeros(n_steps + 1)
    barrier_b = np.zeros(n_steps + 1)
    dist_unsafe = np.zeros(n_steps + 1)
    lyap_v = np.zeros(n_steps + 1)
    agmon = np.zeros(n_steps + 1)

    field = Field(np.zeros(n), 0.0, g)
    soc = scenario.battery
    meas = None
    first_unsafe = None

    def record(i: int, fld: Field, soc_val: float) -> None:
        nonlocal first_unsafe
        _, u_vals, d_vals = signals_at(times[i], soc)
        norm_u[i] = l2_norm(u_vals, g)
        norm_d[i] = l2_norm(d_vals, g)
        fs = eval_functionals(fld, p, beta4, beta5)
        fields[i] = fld.values
        soc_arr[i] = soc_val
        energy_e[i] = fs.energy_e
        barrier_b[i] = fs.barrier_b
        dist_unsafe[i] = fs.dist_unsafe
        lyap_v[i] = fs.lyap_v
        agmon[i] = fs.agmon_max
        if first_unsafe is None and fs.agmon_max > p.h_max:
            first_unsafe = float(times[i])

    record(0, field, soc.soc)

    for idx in range(n_steps):
        t = float(times[idx])
        if proof_exact:
            u1 = u2 = 0.0
        else:
            meas = measure(field, scenario.measurement_noise_std, measure_rng,
                           meas, dt, kind.filter_tau)
            u1, u2 = control_commands(kind, meas, p)

        # demand current is zero-order-held from the interval start; in-domain
        # sources are evaluated at the scheme's quadrature time
        total_i, _, _ = signals_at(t, soc)
        _, u_src, d_src = signals_at(t + theta * dt, soc)

        prev_values = field.values
        field = step(op, field, StepInputs(u_src, d_src, (u1, u2)),
                     rng=process_rng, process_noise_std=cfg.process_noise_std)

        if proof_exact:
            h_theta = theta * field.values + (1.0 - theta) * prev_values
            rate0 = (field.values[0] - prev_values[0]) / dt
            rate_l = (field.values[-1] - prev_values[-1]) / dt
            u1 = (eff_gains.mu1 * h_theta[0] + eff_gains.mu2 * rate0
                  + eff_gains.mu3 * h_theta[g.mid_index])
            u2 = (eff_gains.beta1 * h_theta[-1] + eff_gains.beta2 * rate_l
                  + eff_gains.beta3 * h_theta[g.mid_index])
        coolant[idx] = (coolant_temperature(u1, p), coolant_temperature(u2, p))

        soc = update_soc(soc, total_i, dt)
        record(idx + 1, field, soc.soc)

    coolant[n_steps] = coolant[n_steps - 1]

    metadata = {
        "name": getattr(scenario, "name", ""),
        "scenario_hash": scenario.scenario_hash,
        "seed": scenario.seed,
        "controller": kind.name,
        "mode": kind.mode,
        "scheme": cfg.scheme,
        "dt": dt,
        "horizon": scenario.horizon,
        "n_nodes": n,
        "params": {
            "alpha": p.alpha, "k_bc": p.k_bc, "length": p.length,
            "heat_scale": p.heat_scale, "t_desired": p.t_desired,
            "h_max": p.h_max,
        },
        "noise": {
            "process_std": cfg.process_noise_std,
            "measurement_std": scenario.measurement_noise_std,
        },
        "profile": profile.source,
        "profile_hold_queries": profile.hold_queries,
        "gains": {
            "mu1": eff_gains.mu1, "mu2": eff_gains.mu2, "mu3": eff_gains.mu3,
            "beta1": eff_gains.beta1, "beta2": eff_gains.beta2,
            "beta3": eff_gains.beta3,
        },
        "lyapunov_weights": [beta4, beta5],
        "anomaly": scenario.resolved.get("anomaly") if scenario.resolved else None,
        "flags": list(getattr(scenario, "flags", [])),
        "first_unsafe_time": first_unsafe,
        "certificate": None,
    }

    return Trajectory(
        grid=g, params=p, times=times, fields=fields, coolant=coolant,
        soc=soc_arr, norm_d=norm_d, norm_u=norm_u, energy_e=energy_e,
        barrier_b=barrier_b, dist_unsafe=dist_unsafe, lyap_v=lyap_v,
        agmon_max=agmon, metadata=metadata,
    )

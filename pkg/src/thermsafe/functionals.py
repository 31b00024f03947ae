"""Safety and stability functionals plus trajectory-level monitors.

Functionals of the error field h:

    E(h)  = int (h^2 + h_x^2) dx + h(m)^2        (barrier energy)
    B(h)  = E(h) - h_max^2                       (barrier; safe iff B < 0)
    dist  = sqrt(max(0, h_max^2 - E))            (distance to the unsafe set,
                                                  clamped at zero once E
                                                  exceeds h_max^2)
    V(h)  = (int h^2 dx + b4 h(0)^2 + b5 h(L)^2) / 2
            with b4 = -k alpha mu2, b5 = -k alpha beta2

The Agmon-type majorant  max_x |h|^2 <= E(h)  chains pointwise safety to the
energy: E <= h_max^2 at a sample implies |T - T_d| <= h_max everywhere.

Monitors re-check, along a recorded trajectory and with certificate
constants, the two rate inequalities

    dB/dt <= -c3 dist^2 + c4 ||D||^2 + c5 ||u||^2 + kappa
    dV/dt <= -d3 V      + d4 ||D||^2 + d5 ||u||^2

with time derivatives estimated by central differences, and the closed-form
state bounds parameterized by user-supplied constant tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .control import Gains
from .grid import Field, PhysicalParams, s_norm, spatial_gradient
from .trajectory import Trajectory

__all__ = [
    "FunctionalSample",
    "AgmonResult",
    "MonitorReport",
    "BoundCheckReport",
    "eval_functionals",
    "agmon_check",
    "lyapunov_weights",
    "monitor_trajectory",
    "trajectory_bound_check",
]


@dataclass(frozen=True)
class FunctionalSample:
    time: float
    energy_e: float
    barrier_b: float
    dist_unsafe: float
    lyap_v: float
    agmon_max: float


@dataclass(frozen=True)
class AgmonResult:
    ok: bool
    max_sq: float
    energy_e: float


def lyapunov_weights(gains: Gains, params: PhysicalParams) -> Tuple[float, float]:
    """Boundary weights (b4, b5) = (-k alpha mu2, -k alpha beta2).

    Zero for the open loop / non-negative rate gains; runs monitored with
    zero weights are flagged as such by the scenario layer.
    """
    b4 = -params.k_bc * params.alpha * gains.mu2
    b5 = -params.k_bc * params.alpha * gains.beta2
    return (float(b4), float(b5))


def eval_functionals(
    field: Field, params: PhysicalParams, beta4: float, beta5: float
) -> FunctionalSample:
    g = field.grid
    h = field.values
    hx = spatial_gradient(h, g)
    # on a diverging trajectory the squares may overflow; inf is the honest
    # value for these functionals and downstream monitors treat it as a miss
    with np.errstate(over="ignore"):
        int_h2 = float(np.trapezoid(h**2, dx=g.dx))
        int_hx2 = float(np.trapezoid(hx**2, dx=g.dx))
        e = int_h2 + int_hx2 + float(h[g.mid_index] ** 2)
        b = e - params.h_max**2
        dist = float(np.sqrt(max(0.0, -b)))
        v = 0.5 * (int_h2 + beta4 * float(h[0] ** 2) + beta5 * float(h[-1] ** 2))
    return FunctionalSample(
        time=field.time,
        energy_e=e,
        barrier_b=b,
        dist_unsafe=dist,
        lyap_v=v,
        agmon_max=float(np.max(np.abs(h))),
    )


def agmon_check(field: Field, params: PhysicalParams) -> AgmonResult:
    """max_x |h|^2 <= E(h); a failure indicates a discretization bug."""
    s = eval_functionals(field, params, 0.0, 0.0)
    max_sq = s.agmon_max**2
    return AgmonResult(ok=bool(max_sq <= s.energy_e + 1e-12), max_sq=max_sq,
                       energy_e=s.energy_e)


Violation = Tuple[float, float, float]  # (time, lhs, rhs)


@dataclass
class MonitorReport:
    condition2_status: str  # "ok" | "not-monitorable"
    vcond2_status: str
    condition2_violations: List[Violation]
    vcond2_violations: List[Violation]
    condition2_fraction: Optional[float]
    vcond2_fraction: Optional[float]
    n_checked: int

    def to_dict(self) -> dict:
        def _vlist(vs):
            return [
                {"time": t, "lhs": lhs, "rhs": rhs} for t, lhs, rhs in vs
            ]

        return {
            "condition2": {
                "status": self.condition2_status,
                "fraction_satisfied": self.condition2_fraction,
                "violations": _vlist(self.condition2_violations),
            },
            "vcond2": {
                "status": self.vcond2_status,
                "fraction_satisfied": self.vcond2_fraction,
                "violations": _vlist(self.vcond2_violations),
            },
            "n_checked": self.n_checked,
        }


def _have(constants: Mapping, keys) -> bool:
    return all(constants.get(k) is not None for k in keys)


def _check_rate_bound(
    times: np.ndarray,
    series: np.ndarray,
    bound: np.ndarray,
    tol_rel: float,
    tol_abs: float,
) -> List[Violation]:
    """Central-difference d(series)/dt vs bound at interior samples."""
    out: List[Violation] = []
    for i in range(1, len(times) - 1):
        dt2 = times[i + 1] - times[i - 1]
        lhs = (series[i + 1] - series[i - 1]) / dt2
        rhs = bound[i]
        if lhs > rhs + tol_abs + tol_rel * abs(rhs):
            out.append((float(times[i]), float(lhs), float(rhs)))
    return out


def monitor_trajectory(
    traj: Trajectory,
    constants: Mapping,
    tol_rel: float = 1e-2,
    tol_abs: float = 1e-6,
) -> MonitorReport:
    """Re-check the barrier and Lyapunov rate inequalities along a run.

    ``constants`` supplies c3, c4, c5, kappa (barrier) and d3, d4, d5
    (Lyapunov); a condition with missing/None or non-positive decay constants
    is reported "not-monitorable" rather than failed.
    """
    times = traj.times
    n_checked = max(0, len(times) - 2)
    d2 = traj.norm_d**2
    u2 = traj.norm_u**2

    if _have(constants, ("c3", "c4", "c5", "kappa")) and constants["c3"] > 0:
        bound = (
            -constants["c3"] * traj.dist_unsafe**2
            + constants["c4"] * d2
            + constants["c5"] * u2
            + constants["kappa"]
        )
        c2_viol = _check_rate_bound(times, traj.barrier_b, bound, tol_rel,
                                    tol_abs)
        c2_status = "ok"
        c2_frac = 1.0 - len(c2_viol) / n_checked if n_checked else 1.0
    else:
        c2_viol, c2_status, c2_frac = [], "not-monitorable", None

    if _have(constants, ("d3", "d4", "d5")) and constants["d3"] > 0:
        bound = (
            -constants["d3"] * traj.lyap_v
            + constants["d4"] * d2
            + constants["d5"] * u2
        )
        v_viol = _check_rate_bound(times, traj.lyap_v, bound, tol_rel, tol_abs)
        v_status = "ok"
        v_frac = 1.0 - len(v_viol) / n_checked if n_checked else 1.0
    else:
        v_viol, v_status, v_frac = [], "not-monitorable", None

    return MonitorReport(
        condition2_status=c2_status,
        vcond2_status=v_status,
        condition2_violations=c2_viol,
        vcond2_violations=v_viol,
        condition2_fraction=c2_frac,
        vcond2_fraction=v_frac,
        n_checked=n_checked,
    )


@dataclass
class BoundCheckReport:
    bound13_status: str
    bound14_status: str
    bound13_fraction: Optional[float]
    bound14_fraction: Optional[float]
    bound13_violations: List[Violation]
    bound14_violations: List[Violation]

    def to_dict(self) -> dict:
        return {
            "bound13": {
                "status": self.bound13_status,
                "fraction_satisfied": self.bound13_fraction,
                "n_violations": len(self.bound13_violations),
            },
            "bound14": {
                "status": self.bound14_status,
                "fraction_satisfied": self.bound14_fraction,
                "n_violations": len(self.bound14_violations),
            },
        }


def _running_sup_sq(norms: np.ndarray) -> np.ndarray:
    """Running sup over (0, t] of a norm series, squared; 0 at the start."""
    sup = np.maximum.accumulate(norms)
    out = sup**2
    out[0] = 0.0
    return out


def trajectory_bound_check(
    traj: Trajectory,
    k13: Optional[Sequence[float]],
    k14: Optional[Sequence[float]],
    tol_rel: float = 1e-2,
    tol_abs: float = 1e-6,
) -> BoundCheckReport:
    """Evaluate the closed-form safety/stability state bounds pointwise.

    k13 = (k1..k7): at every sample,
        dist^2(t) >= k1 dist^2(0) - k2 e^{k3 t} sup||u||^2
                     - k4 e^{k5 t} sup||D||^2 - k6 e^{k7 t}
    k14 = (k1..k8): at every sample,
        ||h(t)||_S^2 <= k1 e^{-k2 t} ||h0||_S^2 - k3 e^{-k4 t} sup||u||^2
                        - k5 e^{-k6 t} sup||D||^2 - k7 e^{-k8 t}
    sup norms are running suprema of the spatial L2 norms over (0, t].
    Pass None to skip a bound (reported "not-monitorable").
    """
    times = traj.times
    sup_u2 = _running_sup_sq(traj.norm_u)
    sup_d2 = _running_sup_sq(traj.norm_d)

    if k13 is not None:
        k1, k2, k3, k4, k5, k6, k7 = k13
        lhs = traj.dist_unsafe**2
        rhs = (
            k1 * lhs[0]
            - k2 * np.exp(k3 * times) * sup_u2
            - k4 * np.exp(k5 * times) * sup_d2
            - k6 * np.exp(k7 * times)
        )
        viol13 = [
            (float(times[i]), float(lhs[i]), float(rhs[i]))
            for i in range(len(times))
            if lhs[i] < rhs[i] - tol_abs - tol_rel * abs(rhs[i])
        ]
        frac13 = 1.0 - len(viol13) / len(times)
        status13 = "ok"
    else:
        viol13, frac13, status13 = [], None, "not-monitorable"

    if k14 is not None:
        k1, k2, k3, k4, k5, k6, k7, k8 = k14
        s2 = np.array([s_norm(f, traj.grid) ** 2 for f in traj.fields])
        rhs = (
            k1 * np.exp(-k2 * times) * s2[0]
            - k3 * np.exp(-k4 * times) * sup_u2
            - k5 * np.exp(-k6 * times) * sup_d2
            - k7 * np.exp(-k8 * times)
        )
        viol14 = [
            (float(times[i]), float(s2[i]), float(rhs[i]))
            for i in range(len(times))
            if s2[i] > rhs[i] + tol_abs + tol_rel * abs(rhs[i])
        ]
        frac14 = 1.0 - len(viol14) / len(times)
        status14 = "ok"
    else:
        viol14, frac14, status14 = [], None, "not-monitorable"

    return BoundCheckReport(
        bound13_status=status13,
        bound14_status=status14,
        bound13_fraction=frac13,
        bound14_fraction=frac14,
        bound13_violations=viol13,
        bound14_violations=viol14,
    )

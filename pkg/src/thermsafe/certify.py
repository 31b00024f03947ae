"""Controller-gain certification.

Two closed-form inequality systems are checked for a candidate gain set:

* a *safety* system — sign/size clauses on each boundary gain plus one
  design condition coupling free parameters ``gamma3..gamma5`` to the
  diffusivity — which yields barrier-rate constants ``c1..c5`` and the
  saturation offset ``kappa``;
* a *stability* system — three margin inequalities in free parameters
  ``sigma1..sigma4`` — which yields Lyapunov-rate constants ``d1..d5``.

Free parameters are found by a deterministic coordinate-ascent search over a
log-spaced box, with a low-discrepancy fallback scan, maximising the smallest
inequality margin.  Gain sets that fail the safety clauses may still earn a
``numeric-ISSt-only`` label through a short zero-input simulation that
empirically checks the Lyapunov decrement; everything else is uncertified.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from .control import Gains
from .functionals import lyapunov_weights
from .grid import PhysicalParams

__all__ = [
    "CLASS_CERTIFIED",
    "CLASS_NUMERIC",
    "CLASS_UNCERTIFIED",
    "Certificate",
    "DesignParams",
    "SearchResult",
    "Theorem1Result",
    "Theorem2Result",
    "check_theorem1",
    "check_theorem2",
    "classify",
    "find_design_params",
]

CLASS_CERTIFIED = "certified-pISSf-and-ISSt"
CLASS_NUMERIC = "numeric-ISSt-only"
CLASS_UNCERTIFIED = "uncertified"

_BOX = (1e-3, 1e3)
_GRID_POINTS = 25
_SCAN_POINTS = 4096
_REFINE_WINDOWS = (10.0, 3.0, 1.5)

_PARAM_NAMES = (
    "gamma1", "gamma2", "gamma3", "gamma4", "gamma5",
    "sigma1", "sigma2", "sigma3", "sigma4",
)


@dataclass(frozen=True)
class DesignParams:
    """Free positive parameters of the two inequality systems."""

    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float
    gamma5: float
    sigma1: float
    sigma2: float
    sigma3: float
    sigma4: float

    def __post_init__(self):
        for name in _PARAM_NAMES:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in _PARAM_NAMES], dtype=float)


@dataclass
class Theorem1Result:
    """Safety-certificate verdict: per-clause booleans, margins, constants."""

    passed: bool
    clauses: Dict[str, bool]
    margins: Dict[str, float]
    constants: Optional[Dict[str, object]]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "clauses": dict(self.clauses),
            "margins": dict(self.margins),
            "constants": None if self.constants is None else dict(self.constants),
        }


@dataclass
class Theorem2Result:
    """Stability-certificate verdict.

    ``status`` is "pass"/"fail" when the safety gain clauses hold and
    "not-applicable" otherwise (the stability derivation assumes them).
    """

    status: str
    margins: Dict[str, float]
    constants: Dict[str, object]

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "margins": dict(self.margins),
            "constants": dict(self.constants),
        }


@dataclass
class SearchResult:
    """Outcome of the free-parameter search."""

    feasible: bool
    design_params: Optional[DesignParams]
    min_margin: float
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "design_params": None
            if self.design_params is None
            else asdict(self.design_params),
            "min_margin": self.min_margin,
            "reason": self.reason,
        }


@dataclass
class Certificate:
    """Full certification record for one gain set."""

    classification: str
    gains: Gains
    design_params: Optional[DesignParams]
    theorem1: Theorem1Result
    theorem2: Theorem2Result
    constants: Dict[str, object]
    search: Dict[str, object]
    probe: Optional[Dict[str, object]]

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "gains": asdict(self.gains),
            "design_params": None
            if self.design_params is None
            else asdict(self.design_params),
            "theorem1": self.theorem1.to_dict(),
            "theorem2": self.theorem2.to_dict(),
            "constants": dict(self.constants),
            "search": dict(self.search),
            "probe": None if self.probe is None else dict(self.probe),
        }


def _gain_clauses(
    gains: Gains, params: PhysicalParams
) -> Tuple[Dict[str, bool], Dict[str, float]]:
    """Sign/size clauses on the six boundary gains.

    All are strict except the rate-gain lower bounds, which are inclusive:
    (mu1 - 1)/alpha <= mu2 and (beta1 - 1)/alpha <= beta2.
    """
    a = params.alpha
    margins = {
        "mu1_below_one": 1.0 - gains.mu1,
        "mu2_lower": gains.mu2 - (gains.mu1 - 1.0) / a,
        "mu2_negative": -gains.mu2,
        "mu3_negative": -gains.mu3,
        "beta1_below_one": 1.0 - gains.beta1,
        "beta2_lower": gains.beta2 - (gains.beta1 - 1.0) / a,
        "beta2_negative": -gains.beta2,
        "beta3_negative": -gains.beta3,
    }
    clauses = {
        name: (m >= 0.0 if name.endswith("lower") else m > 0.0)
        for name, m in margins.items()
    }
    return clauses, margins


def _design_margin(params: PhysicalParams, dp: DesignParams) -> float:
    """Slack in the coupling condition (gamma3+gamma4)/(2 a^2) + 1/gamma5 < 1/a."""
    a = params.alpha
    return 1.0 / a - (dp.gamma3 + dp.gamma4) / (2.0 * a * a) - 1.0 / dp.gamma5


def _sigma_margins(
    gains: Gains, params: PhysicalParams, dp: DesignParams
) -> Dict[str, float]:
    """The three stability margins dtilde1..dtilde3 (must all be > 0)."""
    a, k = params.alpha, params.k_bc
    dt1 = a - (
        dp.sigma1
        + dp.sigma2
        + k * a * (gains.mu3 * dp.sigma3 + gains.beta3 * dp.sigma4)
    )
    dt2 = k * a * (1.0 - gains.mu1) - a / 4.0 - k * a * gains.mu3 / (2.0 * dp.sigma3)
    dt3 = k * a * (1.0 - gains.beta1) - a / 4.0 - k * a * gains.beta3 / (2.0 * dp.sigma4)
    return {"dtilde1": dt1, "dtilde2": dt2, "dtilde3": dt3}


def check_theorem1(
    gains: Gains,
    params: PhysicalParams,
    design_params: DesignParams,
    c1: float = 1.5,
    c2: float = 0.5,
) -> Theorem1Result:
    """Evaluate the safety inequality system and its barrier-rate constants.

    ``c1``/``c2`` are the barrier sandwich coefficients (any c1 > 1,
    0 < c2 < 1 work; the defaults are the shipped convention).
    """
    if not c1 > 1.0:
        raise ValueError(f"c1 must be > 1, got {c1}")
    if not 0.0 < c2 < 1.0:
        raise ValueError(f"c2 must be in (0, 1), got {c2}")

    clauses, margins = _gain_clauses(gains, params)
    margins = dict(margins)
    margins["design_condition"] = _design_margin(params, design_params)
    clauses = dict(clauses)
    clauses["design_condition"] = margins["design_condition"] > 0.0
    passed = all(clauses.values())

    constants: Optional[Dict[str, object]] = None
    if gains.mu1 < 1.0 and gains.beta1 < 1.0:
        a, k = params.alpha, params.k_bc
        boundary = (k * a / 4.0) * (
            gains.mu3**2 / (1.0 - gains.mu1) + gains.beta3**2 / (1.0 - gains.beta1)
        )
        c3 = 2.0 * max(
            a,
            (design_params.gamma1 + design_params.gamma2) / 2.0,
            design_params.gamma5 / 2.0 + boundary,
        )
        constants = {
            "c1": float(c1),
            "c2": float(c2),
            "c3": float(c3),
            "c4": float(1.0 / design_params.gamma1 + 1.0 / design_params.gamma3),
            "c5": float(1.0 / design_params.gamma2 + 1.0 / design_params.gamma4),
            "kappa": float(c3 * params.h_max**2),
            "c3_form": "as-printed",
        }

    return Theorem1Result(
        passed=passed,
        clauses=clauses,
        margins={n: float(m) for n, m in margins.items()},
        constants=constants,
    )


def check_theorem2(
    gains: Gains, params: PhysicalParams, design_params: DesignParams
) -> Theorem2Result:
    """Evaluate the stability inequality system and its Lyapunov constants."""
    clauses, _ = _gain_clauses(gains, params)
    margins = _sigma_margins(gains, params, design_params)

    beta4, beta5 = lyapunov_weights(gains, params)
    constants: Dict[str, object] = {
        "beta4": float(beta4),
        "beta5": float(beta5),
        "d1": float(0.5 * min(1.0, beta4, beta5)),
        "d2": float(0.5 * max(1.0, beta4, beta5)),
        "d4": float(1.0 / (2.0 * design_params.sigma1)),
        "d5": float(1.0 / (2.0 * design_params.sigma2)),
    }
    if beta4 > 0.0 and beta5 > 0.0:
        constants["d3"] = float(
            2.0
            * min(
                margins["dtilde1"] / 2.0,
                margins["dtilde2"] / beta4,
                margins["dtilde3"] / beta5,
            )
        )
    else:
        # zero/negative boundary weights make the Lyapunov functional
        # degenerate; no decay rate can be quoted
        constants["d3"] = None

    if not all(clauses.values()):
        status = "not-applicable"
    elif min(margins.values()) > 0.0:
        status = "pass"
    else:
        status = "fail"

    return Theorem2Result(
        status=status,
        margins={n: float(m) for n, m in margins.items()},
        constants=constants,
    )


def _min_margin_rows(
    gains: Gains, params: PhysicalParams, pts: np.ndarray
) -> np.ndarray:
    """Smallest inequality margin for each row of ``pts`` (columns follow
    _PARAM_NAMES).  gamma1/gamma2 do not enter any margin; they only shape
    the reported constants."""
    a, k = params.alpha, params.k_bc
    g3, g4, g5 = pts[:, 2], pts[:, 3], pts[:, 4]
    s1, s2, s3, s4 = pts[:, 5], pts[:, 6], pts[:, 7], pts[:, 8]
    m_design = 1.0 / a - (g3 + g4) / (2.0 * a * a) - 1.0 / g5
    dt1 = a - (s1 + s2 + k * a * (gains.mu3 * s3 + gains.beta3 * s4))
    dt2 = k * a * (1.0 - gains.mu1) - a / 4.0 - k * a * gains.mu3 / (2.0 * s3)
    dt3 = k * a * (1.0 - gains.beta1) - a / 4.0 - k * a * gains.beta3 / (2.0 * s4)
    return np.minimum.reduce([m_design, dt1, dt2, dt3])


def _sweep_axes(
    gains: Gains,
    params: PhysicalParams,
    x: np.ndarray,
    grids,
) -> np.ndarray:
    """One full coordinate sweep.  Along each axis the candidate maximising
    the min-margin is taken; grids are ascending, and np.argmax returns the
    first maximiser, so ties resolve to the smallest value (lexicographic
    tie-break, which also guarantees determinism)."""
    x = x.copy()
    for axis in range(len(_PARAM_NAMES)):
        cand = grids[axis]
        pts = np.repeat(x[None, :], cand.size, axis=0)
        pts[:, axis] = cand
        vals = _min_margin_rows(gains, params, pts)
        x = pts[int(np.argmax(vals))]
    return x


def _local_refine(
    gains: Gains, params: PhysicalParams, x: np.ndarray, lo: float, hi: float
) -> np.ndarray:
    for window in _REFINE_WINDOWS:
        for _ in range(3):
            grids = []
            for i in range(len(_PARAM_NAMES)):
                g = np.geomspace(
                    max(x[i] / window, lo), min(x[i] * window, hi), _GRID_POINTS
                )
                grids.append(np.unique(np.append(g, x[i])))
            x = _sweep_axes(gains, params, x, grids)
    return x


def find_design_params(
    gains: Gains,
    params: PhysicalParams,
    *,
    box: Tuple[float, float] = _BOX,
    grid_points: int = _GRID_POINTS,
    scan_points: int = _SCAN_POINTS,
) -> SearchResult:
    """Deterministically search the free-parameter box for positive margins.

    Coordinate-wise ascent on the smallest margin over a log-spaced grid,
    run to a fixed point, then refined with progressively narrower windows.
    If that ends infeasible, a Halton scan of the box is tried and, on a
    hit, refined the same way.  Returns the maximin point found.
    """
    lo, hi = box
    if not (0 < lo < hi):
        raise ValueError(f"box must satisfy 0 < lo < hi, got {box}")

    base = np.geomspace(lo, hi, grid_points)
    grids = [base] * len(_PARAM_NAMES)
    x = np.ones(len(_PARAM_NAMES))
    for _ in range(40):
        x_new = _sweep_axes(gains, params, x, grids)
        if np.array_equal(x_new, x):
            break
        x = x_new
    x = _local_refine(gains, params, x, lo, hi)
    margin = float(_min_margin_rows(gains, params, x[None, :])[0])

    if margin <= 0.0:
        sampler = qmc.Halton(d=len(_PARAM_NAMES), scramble=False)
        unit = sampler.random(scan_points)
        pts = 10.0 ** (np.log10(lo) + (np.log10(hi) - np.log10(lo)) * unit)
        vals = _min_margin_rows(gains, params, pts)
        best = int(np.argmax(vals))
        if vals[best] > 0.0:
            x = _local_refine(gains, params, pts[best].copy(), lo, hi)
            margin = float(_min_margin_rows(gains, params, x[None, :])[0])

    if margin <= 0.0:
        return SearchResult(
            feasible=False,
            design_params=None,
            min_margin=margin,
            reason=(
                "infeasible: coordinate ascent and a "
                f"{scan_points}-point low-discrepancy scan of "
                f"[{lo:g}, {hi:g}]^9 found no positive margin "
                f"(best {margin:.3e})"
            ),
        )

    dp = DesignParams(*(float(v) for v in x))
    # re-evaluate through the scalar code path so the reported margin is
    # bit-identical to what check_theorem2/_design_margin reproduce
    final = min(
        _design_margin(params, dp), *_sigma_margins(gains, params, dp).values()
    )
    return SearchResult(feasible=True, design_params=dp, min_margin=float(final))


def _lyapunov_value(values: np.ndarray, x: np.ndarray, beta4: float, beta5: float) -> float:
    return float(
        0.5
        * (
            np.trapezoid(values**2, x)
            + beta4 * values[0] ** 2
            + beta5 * values[-1] ** 2
        )
    )


def _dissipation_probe(
    gains: Gains,
    params: PhysicalParams,
    beta4: float,
    beta5: float,
    d3: float,
    n_steps: int,
) -> Dict[str, object]:
    """Zero-input closed-loop run checking dV/dt <= -d3 V empirically.

    The inequality-system margins can be satisfiable even for gain sets whose
    closed loop is unstable (the margins see only selected couplings), so a
    'numeric' label is granted only when the simulated Lyapunov decrement
    actually holds on >= 99% of steps and the run does not grow.
    """
    from .grid import Field, build_grid
    from .solver import SolverError, StepInputs, assemble_system, step

    n_nodes, dt = 21, 0.2
    grid = build_grid(n_nodes, params.length)
    report: Dict[str, object] = {
        "d3": float(d3),
        "n_steps": int(n_steps),
        "dt": dt,
        "grid_nodes": n_nodes,
    }
    try:
        op = assemble_system(params, gains, grid, dt, "crank-nicolson")
    except SolverError as exc:
        report.update(ok=False, fraction=0.0, reason=f"assembly failed: {exc}")
        return report

    field = Field(4.0 + 3.0 * np.cos(np.pi * grid.x / params.length), 0.0, grid)
    zeros = np.zeros(n_nodes)
    values = [_lyapunov_value(field.values, grid.x, beta4, beta5)]
    try:
        for _ in range(n_steps):
            field = step(op, field, StepInputs(zeros, zeros))
            values.append(_lyapunov_value(field.values, grid.x, beta4, beta5))
    except SolverError as exc:
        report.update(ok=False, fraction=0.0, reason=f"run failed: {exc}")
        return report

    v = np.array(values)
    rate = (v[2:] - v[:-2]) / (2.0 * dt)
    bound = -d3 * v[1:-1]
    tol = 1e-9 + 1e-2 * np.abs(bound)
    fraction = float(np.mean(rate <= bound + tol))
    ok = bool(fraction >= 0.99 and np.isfinite(v).all() and v[-1] <= v[0])
    report.update(
        ok=ok,
        fraction=fraction,
        v_initial=float(v[0]),
        v_final=float(v[-1]),
    )
    if not ok:
        report["reason"] = "Lyapunov decrement violated"
    return report


def classify(
    gains: Gains,
    params: PhysicalParams,
    *,
    c1: float = 1.5,
    c2: float = 0.5,
    probe_steps: int = 200,
) -> Certificate:
    """Certify a gain set into one of three classes.

    * ``certified-pISSf-and-ISSt`` — both inequality systems hold at some
      searchable free-parameter point.
    * ``numeric-ISSt-only`` — the safety clauses fail, but the stability
      margins are satisfiable, the Lyapunov boundary weights are positive,
      and the zero-input dissipation probe passes.
    * ``uncertified`` — everything else.
    """
    search = find_design_params(gains, params)
    clauses, _ = _gain_clauses(gains, params)
    clauses_ok = all(clauses.values())

    dp_report = (
        search.design_params
        if search.design_params is not None
        else DesignParams(*([1.0] * len(_PARAM_NAMES)))
    )
    t1 = check_theorem1(gains, params, dp_report, c1=c1, c2=c2)
    t2 = check_theorem2(gains, params, dp_report)

    probe: Optional[Dict[str, object]] = None
    if clauses_ok and search.feasible and t1.passed and t2.status == "pass":
        classification = CLASS_CERTIFIED
    elif not clauses_ok:
        beta4, beta5 = lyapunov_weights(gains, params)
        d3 = t2.constants.get("d3")
        if (
            search.feasible
            and beta4 > 0.0
            and beta5 > 0.0
            and d3 is not None
            and d3 > 0.0
        ):
            probe = _dissipation_probe(gains, params, beta4, beta5, d3, probe_steps)
            classification = CLASS_NUMERIC if probe["ok"] else CLASS_UNCERTIFIED
        else:
            classification = CLASS_UNCERTIFIED
    else:
        classification = CLASS_UNCERTIFIED

    constants: Dict[str, object] = {}
    if t1.constants:
        constants.update(t1.constants)
    constants.update(t2.constants)

    return Certificate(
        classification=classification,
        gains=gains,
        design_params=search.design_params,
        theorem1=t1,
        theorem2=t2,
        constants=constants,
        search=search.to_dict(),
        probe=probe,
    )

"""Self-checking refinement studies for the solver, exposed on the CLI.

Two analytic cases with known exact solutions:

* cosine decay: an insulated bar (k_bc = 0, alpha = 1, L = 1) started at
  h0 = cos(pi x) relaxes as h(x,t) = exp(-pi^2 t) cos(pi x).  Halving dx
  with dt proportional to dx^2 must cut the max-norm error by ~4x
  (second-order spatial accuracy).
* uniform heating: an insulated bar under a constant uniform source obeys
  h(x,t) = q t exactly — constants are in the discrete operator's kernel —
  so the error at every refinement level is roundoff, not truncation.
"""

from __future__ import annotations

import numpy as np

from .control import Gains
from .grid import Field, PhysicalParams, build_grid
from .solver import StepInputs, assemble_system, step

__all__ = ["cosine_decay_study", "uniform_heating_study", "run_study"]

_STUDY_PARAMS = PhysicalParams(
    alpha=1.0, k_bc=0.0, length=1.0, heat_scale=0.0,
    t_desired=298.0, h_max=15.0,
)


def _advance(op, values, n_steps, grid, source=None):
    src = np.zeros(grid.n_nodes) if source is None else source
    zeros = np.zeros(grid.n_nodes)
    f = Field(np.asarray(values, dtype=float), 0.0, grid)
    for _ in range(n_steps):
        f = step(op, f, StepInputs(u_field=src, d_field=zeros))
    return f


def _ratios(errors):
    return [
        float(coarse / fine) if fine > 0.0 else float("inf")
        for coarse, fine in zip(errors, errors[1:])
    ]


def cosine_decay_study(levels: int = 3, scheme: str = "crank-nicolson") -> dict:
    """Refinement ladder for the analytic cosine-decay case.

    Level i uses n_nodes = 10 * 2**i + 1 and dt = dx**2 / 2 integrated to
    t = 0.1; consecutive max-norm error ratios should be near 4.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    t_end = 0.1
    rows = []
    errors = []
    for i in range(levels):
        g = build_grid(10 * 2**i + 1, 1.0)
        dt = g.dx**2 / 2.0
        n_steps = round(t_end / dt)
        op = assemble_system(_STUDY_PARAMS, Gains.zeros(), g, dt, scheme)
        f = _advance(op, np.cos(np.pi * g.x), n_steps, g)
        exact = np.exp(-np.pi**2 * f.time) * np.cos(np.pi * g.x)
        err = float(np.max(np.abs(f.values - exact)))
        errors.append(err)
        rows.append({"n_nodes": g.n_nodes, "dt": dt, "max_abs_error": err})
    return {
        "case": "cosine",
        "scheme": scheme,
        "t_end": t_end,
        "levels": rows,
        "error_ratios": _ratios(errors),
        "expected_ratio": 4.0,
    }


def uniform_heating_study(levels: int = 3, scheme: str = "crank-nicolson") -> dict:
    """Refinement ladder for the exact uniform-heating identity h = q*t."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    q, t_end, dt = 0.37, 5.0, 0.1
    rows = []
    for i in range(levels):
        g = build_grid(10 * 2**i + 1, 1.0)
        op = assemble_system(_STUDY_PARAMS, Gains.zeros(), g, dt, scheme)
        f = _advance(op, np.zeros(g.n_nodes), round(t_end / dt), g,
                     source=np.full(g.n_nodes, q))
        err = float(np.max(np.abs(f.values - q * t_end)))
        rows.append({"n_nodes": g.n_nodes, "dt": dt, "max_abs_error": err})
    return {
        "case": "uniform",
        "scheme": scheme,
        "t_end": t_end,
        "levels": rows,
        "tolerance": 1e-6,
        "max_error": max(r["max_abs_error"] for r in rows),
    }


def run_study(case: str, levels: int = 3, scheme: str = "crank-nicolson") -> dict:
    """Dispatch a named study; ``case`` is ``cosine`` or ``uniform``."""
    if case == "cosine":
        return cosine_decay_study(levels, scheme)
    if case == "uniform":
        return uniform_heating_study(levels, scheme)
    raise ValueError(f"unknown study case {case!r}; choose cosine or uniform")

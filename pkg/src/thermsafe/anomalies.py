"""Anomaly signal generators and battery bookkeeping.

Three effects feed the in-domain heat source of a run:

* nominal Joule heating from the demand current, spatially uniform;
* a mechanical fault, modelled as a step-in-time, top-hat-in-space heat
  rate over one cell's width (the affected region is clipped to the
  module, so a fault centred at an end face heats half a cell);
* a current-drain attack that raises the demand current (multiplicative
  and/or additive), heats through the same Joule law, and — once the
  coulomb-counted state of charge is driven below zero — adds a second
  heating term linear in the overdischarge depth.

Discharge current is positive by convention; regeneration is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .grid import Field, Grid, PhysicalParams

__all__ = [
    "AttackSpec",
    "FaultSpec",
    "SocState",
    "attack_effects",
    "fault_field",
    "nominal_heat",
    "update_soc",
]


@dataclass(frozen=True)
class FaultSpec:
    """Localized heating fault: active for t >= onset.

    ``magnitude`` is the heat rate (K/s) applied on the nodes within
    ``location_center ± location_width/2``, intersected with the module.
    """

    onset: float
    magnitude: float
    location_center: float
    location_width: float

    def __post_init__(self):
        if not (math.isfinite(self.onset) and self.onset >= 0):
            raise ValueError(f"onset must be >= 0, got {self.onset}")
        if not (math.isfinite(self.magnitude) and self.magnitude >= 0):
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude}")
        if not math.isfinite(self.location_center):
            raise ValueError(f"location_center must be finite, got {self.location_center}")
        if not (math.isfinite(self.location_width) and self.location_width > 0):
            raise ValueError(f"location_width must be > 0, got {self.location_width}")


@dataclass(frozen=True)
class AttackSpec:
    """Current-drain attack: active for t >= onset.

    The demand current becomes ``multiplier * nominal + drain_current``;
    the associated heating is the Joule-law difference, plus
    ``overdischarge_heat_gain * |soc|`` once the state of charge is
    negative.
    """

    onset: float
    drain_current: float
    overdischarge_heat_gain: float
    multiplier: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.onset) and self.onset >= 0):
            raise ValueError(f"onset must be >= 0, got {self.onset}")
        if not (math.isfinite(self.drain_current) and self.drain_current >= 0):
            raise ValueError(f"drain_current must be >= 0, got {self.drain_current}")
        if not (
            math.isfinite(self.overdischarge_heat_gain)
            and self.overdischarge_heat_gain >= 0
        ):
            raise ValueError(
                f"overdischarge_heat_gain must be >= 0, got {self.overdischarge_heat_gain}"
            )
        if not (math.isfinite(self.multiplier) and self.multiplier >= 0):
            raise ValueError(f"multiplier must be >= 0, got {self.multiplier}")


@dataclass(frozen=True)
class SocState:
    """Coulomb-counting state of charge.

    ``soc`` is a fraction of capacity and may go below zero to represent
    overdischarge depth.
    """

    soc: float
    capacity: float
    initial_soc: float

    def __post_init__(self):
        if not (math.isfinite(self.capacity) and self.capacity > 0):
            raise ValueError(f"capacity must be > 0 (A*h), got {self.capacity}")
        if not math.isfinite(self.soc):
            raise ValueError(f"soc must be finite, got {self.soc}")


def nominal_heat(current: float, params: PhysicalParams) -> float:
    """Uniform Joule heating rate (K/s) for a demand current (A)."""
    return params.heat_scale * current * current


def fault_field(spec: FaultSpec, t: float, grid: Grid) -> Field:
    """Heat-rate field of the fault at time ``t`` (zero before onset)."""
    values = np.zeros(grid.n_nodes)
    if t >= spec.onset:
        half = spec.location_width / 2.0
        tol = 1e-9 * max(grid.dx, 1.0)
        mask = (grid.x >= spec.location_center - half - tol) & (
            grid.x <= spec.location_center + half + tol
        )
        values[mask] = spec.magnitude
    return Field(values, t, grid)


def update_soc(state: SocState, total_current: float, dt: float) -> SocState:
    """Advance the state of charge one step (discharge current positive)."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not math.isfinite(total_current):
        raise ValueError(f"total_current must be finite, got {total_current}")
    drop = total_current * dt / (3600.0 * state.capacity)
    return replace(state, soc=state.soc - drop)


def attack_effects(
    spec: AttackSpec,
    nominal_current: float,
    soc: SocState,
    t: float,
    params: PhysicalParams,
) -> Tuple[float, float]:
    """(total demand current, uniform extra heat rate) at time ``t``.

    Identity pass-through before onset.  The extra heat is continuous in
    time except for the single step at onset: the overdischarge term ramps
    from zero as ``soc`` crosses zero.
    """
    if t < spec.onset:
        return nominal_current, 0.0
    total = spec.multiplier * nominal_current + spec.drain_current
    extra = params.heat_scale * (total * total - nominal_current * nominal_current)
    if soc.soc < 0.0:
        extra += spec.overdischarge_heat_gain * (-soc.soc)
    return total, extra

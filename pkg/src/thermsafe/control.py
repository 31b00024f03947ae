"""Boundary feedback controllers and the sensor/estimation path.

Three controller variants share one command law
    u1 = mu1*h(0) + mu2*h_t(0) + mu3*h(m)      (cold-side coolant, x = 0)
    u2 = beta1*h(L) + beta2*h_t(L) + beta3*h(m) (hot-side coolant, x = L)
with the open-loop variant ("oc") pinning both commands to zero.  Commands
are coolant temperature *errors*; the physical coolant temperature is
T_d + u.

Two closed-loop modes:

"measured"    commands are computed from noisy samples of h at x = 0, L/2, L
              with boundary rates estimated by a backward difference passed
              through a first-order low-pass (time constant ``filter_tau``).
"proof-exact" the boundary derivative terms are folded into the implicit
              step matrix instead (see solver.assemble_system), bypassing
              estimation entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .grid import Field, PhysicalParams

__all__ = [
    "Gains",
    "ControllerKind",
    "Measurements",
    "measure",
    "control_commands",
    "coolant_temperature",
    "CONTROLLER_NAMES",
]

CONTROLLER_NAMES = ("oc", "stc", "stsfc")
MODES = ("measured", "proof-exact")


@dataclass(frozen=True)
class Gains:
    """Feedback gains (mu* act at x=0, beta* at x=L)."""

    mu1: float
    mu2: float
    mu3: float
    beta1: float
    beta2: float
    beta3: float

    @classmethod
    def zeros(cls) -> "Gains":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_tuple(self) -> Tuple[float, float, float, float, float, float]:
        return (self.mu1, self.mu2, self.mu3,
                self.beta1, self.beta2, self.beta3)


@dataclass(frozen=True)
class ControllerKind:
    """A named controller variant with its gains and runtime options.

    coolant_limits, when set, clamps the commanded coolant temperature to
    [lo, hi] Kelvin (off by default).
    """

    name: str
    gains: Gains
    mode: str = "measured"
    filter_tau: float = 1.0
    coolant_limits: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.name not in CONTROLLER_NAMES:
            raise ValueError(
                f"controller name must be one of {CONTROLLER_NAMES}, "
                f"got {self.name!r}"
            )
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.filter_tau < 0:
            raise ValueError(f"filter_tau must be >= 0, got {self.filter_tau}")
        if self.coolant_limits is not None:
            lo, hi = self.coolant_limits
            if not lo < hi:
                raise ValueError(
                    f"coolant_limits must satisfy lo < hi, got {lo}, {hi}"
                )


@dataclass(frozen=True)
class Measurements:
    """Sensor samples at x = 0, L/2, L plus filtered boundary rates."""

    y0: float
    ym: float
    yl: float
    y0_rate: float
    yl_rate: float
    time: float


def measure(
    field: Field,
    noise_std: float,
    rng: np.random.Generator,
    prev: Optional[Measurements],
    dt: float,
    filter_tau: float,
) -> Measurements:
    """Sample the field at the three sensors and update rate estimates.

    Additive N(0, noise_std^2) noise on each sample.  Rates are backward
    differences of the (noisy) boundary samples smoothed by a first-order
    low-pass with gain dt / (filter_tau + dt); filter_tau = 0 disables
    smoothing.  With no previous sample the rates start at zero.
    """
    g = field.grid
    noise = rng.normal(0.0, 1.0, 3) * noise_std
    y0 = float(field.values[0] + noise[0])
    ym = float(field.values[g.mid_index] + noise[1])
    yl = float(field.values[-1] + noise[2])
    if prev is None:
        r0 = rl = 0.0
    else:
        a = dt / (filter_tau + dt)
        r0 = prev.y0_rate + a * ((y0 - prev.y0) / dt - prev.y0_rate)
        rl = prev.yl_rate + a * ((yl - prev.yl) / dt - prev.yl_rate)
    return Measurements(y0=y0, ym=ym, yl=yl, y0_rate=float(r0),
                        yl_rate=float(rl), time=field.time)


def control_commands(
    kind: ControllerKind,
    meas: Measurements,
    params: Optional[PhysicalParams] = None,
) -> Tuple[float, float]:
    """Coolant temperature-error commands (u1, u2) for one step.

    Open loop returns (0, 0).  When the controller carries coolant_limits and
    ``params`` is given, commands are clamped so the physical coolant
    temperature t_desired + u stays inside the limits.
    """
    if kind.name == "oc":
        return (0.0, 0.0)
    g = kind.gains
    u1 = g.mu1 * meas.y0 + g.mu2 * meas.y0_rate + g.mu3 * meas.ym
    u2 = g.beta1 * meas.yl + g.beta2 * meas.yl_rate + g.beta3 * meas.ym
    if kind.coolant_limits is not None and params is not None:
        lo, hi = kind.coolant_limits
        u1 = min(max(u1, lo - params.t_desired), hi - params.t_desired)
        u2 = min(max(u2, lo - params.t_desired), hi - params.t_desired)
    return (float(u1), float(u2))


def coolant_temperature(u: float, params: PhysicalParams) -> float:
    """Physical coolant temperature realizing a command u (K)."""
    return params.t_desired + u

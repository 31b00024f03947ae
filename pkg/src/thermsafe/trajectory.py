"""Closed-loop run record.

Everything a monitor, writer, or plot needs: per-sample fields, coolant
temperatures, state of charge, input/anomaly norms, and the barrier /
Lyapunov functionals evaluated along the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Grid, PhysicalParams

__all__ = ["Trajectory"]


@dataclass
class Trajectory:
    """Arrays indexed by sample (sample 0 is the initial state)."""

    grid: Grid
    params: PhysicalParams
    times: np.ndarray        # (S,)
    fields: np.ndarray       # (S, n_nodes) error temperatures h = T - T_d
    coolant: np.ndarray      # (S, 2) physical coolant temperatures (K)
    soc: np.ndarray          # (S,) state of charge, fraction
    norm_d: np.ndarray       # (S,) spatial L2 norm of the anomaly field
    norm_u: np.ndarray       # (S,) spatial L2 norm of the heat input field
    energy_e: np.ndarray     # (S,)
    barrier_b: np.ndarray    # (S,)
    dist_unsafe: np.ndarray  # (S,)
    lyap_v: np.ndarray       # (S,)
    agmon_max: np.ndarray    # (S,) max_x |h(x, t)|
    metadata: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def max_temperature(self) -> float:
        """T_d + max h over all samples and nodes (K)."""
        return float(self.params.t_desired + self.fields.max())

    def min_coolant(self) -> float:
        return float(self.coolant.min())

    def first_crossing_time(self) -> Optional[float]:
        """First sample time with T > t_desired + h_max anywhere, else None."""
        hot = self.fields.max(axis=1) > self.params.h_max
        idx = np.flatnonzero(hot)
        return float(self.times[idx[0]]) if idx.size else None

    def soc_zero_crossing(self) -> Optional[float]:
        """Linear-interpolated time of the first SOC sign change, else None."""
        s = self.soc
        idx = np.flatnonzero((s[:-1] > 0) & (s[1:] <= 0))
        if idx.size == 0:
            return None
        i = int(idx[0])
        t0, t1 = self.times[i], self.times[i + 1]
        s0, s1 = s[i], s[i + 1]
        if s1 == s0:
            return float(t1)
        return float(t0 + (t1 - t0) * s0 / (s0 - s1))

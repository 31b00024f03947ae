"""Spatial grid, physical parameters, and field containers.

The module state is a temperature *error* field h(x, t) = T(x, t) - T_d on a
uniform 1-D grid over [0, length].  Everything downstream (stepping, norms,
barrier functionals) works on these value objects.

Units
-----
alpha       m^2/s   thermal diffusivity (k_b / (rho * c_p); a diffusivity,
                    even though vendor tables often quote the raw
                    conductivity k_b under the same symbol)
k_bc        1/m     convection-to-conduction ratio eta / k_b entering the
                    cooling boundary conditions
length      m       module length
heat_scale  K/(s*A^2)  converts squared current to a volumetric heating rate
t_desired   K       temperature set point T_d
h_max       K       half-width of the safe band; |T - T_d| < h_max is safe
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhysicalParams",
    "Grid",
    "Field",
    "build_grid",
    "l2_norm",
    "s_norm",
    "spatial_gradient",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of the cooled module."""

    alpha: float
    k_bc: float
    length: float
    heat_scale: float
    t_desired: float
    h_max: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.k_bc < 0:
            raise ValueError(f"k_bc must be >= 0, got {self.k_bc}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        if self.heat_scale < 0:
            raise ValueError(f"heat_scale must be >= 0, got {self.heat_scale}")
        if not self.t_desired > 0:
            raise ValueError(f"t_desired must be > 0, got {self.t_desired}")
        if not self.h_max > 0:
            raise ValueError(f"h_max must be > 0, got {self.h_max}")


@dataclass(frozen=True)
class Grid:
    """Uniform grid with a node exactly at the midpoint x = length/2."""

    n_nodes: int
    length: float
    x: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.x.setflags(write=False)

    @property
    def dx(self) -> float:
        return self.length / (self.n_nodes - 1)

    @property
    def mid_index(self) -> int:
        return (self.n_nodes - 1) // 2


def build_grid(n_nodes: int, length: float) -> Grid:
    """Build a uniform grid of ``n_nodes`` points over [0, length].

    ``n_nodes`` must be odd and >= 5: odd so the domain midpoint (used by the
    midpoint-feedback terms and the midpoint sensor) falls exactly on a node,
    >= 5 so the ghost-node boundary stencils do not overlap.
    """
    if not isinstance(n_nodes, (int, np.integer)):
        raise ValueError(f"n_nodes must be an integer, got {n_nodes!r}")
    if n_nodes < 5:
        raise ValueError(f"n_nodes must be >= 5, got {n_nodes}")
    if n_nodes % 2 == 0:
        raise ValueError(
            f"n_nodes must be odd so x = length/2 is a grid node, got {n_nodes}"
        )
    if not length > 0:
        raise ValueError(f"length must be > 0, got {length}")
    x = np.linspace(0.0, float(length), int(n_nodes))
    return Grid(n_nodes=int(n_nodes), length=float(length), x=x)


@dataclass(frozen=True)
class Field:
    """Error-temperature values on a grid at one time instant."""

    values: np.ndarray
    time: float
    grid: Grid

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field has {vals.shape} values for a grid of "
                f"{self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite field values at t={self.time}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def l2_norm(values: np.ndarray, grid: Grid) -> float:
    """Spatial L2 norm sqrt(integral of f^2 dx), trapezoid quadrature."""
    return float(np.sqrt(np.trapezoid(np.asarray(values) ** 2, dx=grid.dx)))


def s_norm(values: np.ndarray, grid: Grid) -> float:
    """Boundary-augmented norm sqrt(integral of f^2 dx + f(0)^2 + f(L)^2)."""
    v = np.asarray(values, dtype=float)
    return float(
        np.sqrt(np.trapezoid(v**2, dx=grid.dx) + v[0] ** 2 + v[-1] ** 2)
    )


def spatial_gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Second-order spatial derivative estimate.

    Central differences in the interior, second-order one-sided stencils at
    both boundaries.
    """
    return np.gradient(np.asarray(values, dtype=float), grid.dx, edge_order=2)

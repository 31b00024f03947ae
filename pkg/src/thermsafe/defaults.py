"""Shipped controller gain sets and scenario defaults.

The three named controllers:

``oc``     open loop — coolant pinned at the set-point (zero command).
``stc``    stability-only feedback — stabilizing boundary gains whose
           midpoint couplings are positive, so the safety sign clauses
           fail by construction; certified numerically instead.
``stsfc``  stability-and-safety feedback — gains satisfying both
           inequality systems.
"""

from .control import Gains

__all__ = ["DEFAULT_GAINS", "SCENARIO_DEFAULTS"]

DEFAULT_GAINS = {
    "oc": Gains.zeros(),
    "stc": Gains(mu1=-0.5, mu2=-0.5, mu3=0.2,
                 beta1=-0.5, beta2=-0.5, beta3=0.2),
    "stsfc": Gains(mu1=-1.0, mu2=-2.0, mu3=-2.0,
                   beta1=-1.0, beta2=-2.0, beta3=-2.0),
}

# values merged into a scenario config when the corresponding key is absent
SCENARIO_DEFAULTS = {
    "grid": {"n_nodes": 101},
    "solver": {"scheme": "crank-nicolson", "dt": 0.1},
    "controller": {"mode": "measured", "filter_tau": 1.0},
    "anomaly": {"kind": "none"},
    "current_profile": "builtin:udds",
    "battery": {"capacity_ah": 160.0, "initial_soc": 0.25},
    "noise": {"process_std": 0.01, "measurement_std": 0.1},
}

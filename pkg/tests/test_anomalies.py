"""Anomaly signal generators: localized fault heating, overdischarge attack,
coulomb-counting SOC bookkeeping.

Oracles are closed-form arithmetic and quadrature identities.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermsafe.anomalies import (
    AttackSpec,
    FaultSpec,
    SocState,
    attack_effects,
    fault_field,
    nominal_heat,
    update_soc,
)
from thermsafe.grid import PhysicalParams, build_grid


def make_params(heat_scale=2e-6):
    return PhysicalParams(alpha=0.01, k_bc=1.0, length=1.0,
                          heat_scale=heat_scale, t_desired=298.0, h_max=15.0)


# --- nominal heating ------------------------------------------------------------

def test_nominal_heat_zero_current():
    assert nominal_heat(0.0, make_params()) == 0.0


def test_nominal_heat_worked_value():
    assert nominal_heat(100.0, make_params(heat_scale=2e-6)) == pytest.approx(0.02)


@given(st.floats(min_value=-500, max_value=500, allow_nan=False))
def test_nominal_heat_even_in_current(current):
    p = make_params()
    assert nominal_heat(current, p) == nominal_heat(-current, p)
    assert nominal_heat(current, p) >= 0.0


# --- fault field -----------------------------------------------------------------

def test_fault_spec_validation():
    with pytest.raises(ValueError):
        FaultSpec(onset=-1.0, magnitude=2.0, location_center=0.5,
                  location_width=0.1)
    with pytest.raises(ValueError):
        FaultSpec(onset=700.0, magnitude=2.0, location_center=0.5,
                  location_width=0.0)
    with pytest.raises(ValueError):
        FaultSpec(onset=700.0, magnitude=-2.0, location_center=0.5,
                  location_width=0.1)


def test_fault_zero_before_onset():
    spec = FaultSpec(onset=700.0, magnitude=2.0, location_center=0.5,
                     location_width=0.1)
    g = build_grid(101, 1.0)
    f = fault_field(spec, 699.999, g)
    assert np.all(f.values == 0.0)
    assert f.time == 699.999


def test_fault_top_hat_values_and_support():
    spec = FaultSpec(onset=700.0, magnitude=2.0, location_center=0.5,
                     location_width=0.1)
    g = build_grid(101, 1.0)
    f = fault_field(spec, 700.0, g)  # active from onset inclusive
    inside = (g.x >= 0.45 - 1e-12) & (g.x <= 0.55 + 1e-12)
    assert np.all(f.values[inside] == 2.0)
    assert np.all(f.values[~inside] == 0.0)


def test_fault_integral_matches_magnitude_times_width():
    spec = FaultSpec(onset=0.0, magnitude=2.0, location_center=0.5,
                     location_width=0.1)
    g = build_grid(101, 1.0)
    f = fault_field(spec, 1.0, g)
    integral = np.trapezoid(f.values, g.x)
    # the hard indicator picks up exactly one magnitude*dx of trapezoid ramp
    assert abs(integral - 2.0 * 0.1) <= 2.0 * g.dx * (1.0 + 1e-9)


def test_fault_center_at_right_edge_clips():
    # half the support sticks out past x = L and is clipped away
    g = build_grid(101, 1.0)
    spec = FaultSpec(onset=700.0, magnitude=2.0, location_center=1.0,
                     location_width=0.1)
    f = fault_field(spec, 800.0, g)
    n_tenth = (g.n_nodes - 1) // 10
    assert np.all(f.values[: g.n_nodes - 1 - n_tenth] == 0.0)
    assert f.values[-1] == 2.0
    integral = np.trapezoid(f.values, g.x)
    assert abs(integral - 2.0 * 0.05) <= 2.0 * g.dx


def test_fault_energy_bookkeeping():
    # time- and space-integrated heat equals magnitude*width*(t_end - onset)
    # within 1% once the grid resolves the support (quadrature error ~ dx/width)
    spec = FaultSpec(onset=700.0, magnitude=2.0, location_center=0.95,
                     location_width=0.1)
    g = build_grid(2001, 1.0)
    dt, t_end = 0.5, 710.0
    times = np.arange(0.0, t_end, dt)
    total = sum(np.trapezoid(fault_field(spec, t, g).values, g.x) * dt
                for t in times)
    expected = 2.0 * 0.1 * (t_end - 700.0)
    assert abs(total - expected) <= 0.01 * expected


# --- SOC bookkeeping -------------------------------------------------------------

def test_soc_state_validation():
    with pytest.raises(ValueError):
        SocState(soc=0.5, capacity=0.0, initial_soc=0.5)


def test_update_soc_unit_consistency():
    s = SocState(soc=1.0, capacity=1.0, initial_soc=1.0)
    s2 = update_soc(s, 3600.0, 1.0)
    assert s2.soc == pytest.approx(0.0)
    assert s2.capacity == 1.0 and s2.initial_soc == 1.0


def test_update_soc_zero_current_exact():
    s = SocState(soc=0.37, capacity=120.0, initial_soc=0.37)
    for _ in range(1000):
        s = update_soc(s, 0.0, 0.1)
    assert s.soc == 0.37


def test_update_soc_requires_positive_dt():
    s = SocState(soc=0.5, capacity=120.0, initial_soc=0.5)
    with pytest.raises(ValueError):
        update_soc(s, 10.0, 0.0)


def test_update_soc_sign_convention():
    # positive current discharges, negative current (regen) charges
    s = SocState(soc=0.5, capacity=120.0, initial_soc=0.5)
    assert update_soc(s, 50.0, 1.0).soc < 0.5
    assert update_soc(s, -50.0, 1.0).soc > 0.5


@given(
    st.floats(min_value=-400, max_value=400, allow_nan=False),
    st.floats(min_value=0.01, max_value=10.0),
    st.floats(min_value=0.01, max_value=10.0),
)
def test_update_soc_additive_in_time(current, dt1, dt2):
    s = SocState(soc=0.5, capacity=120.0, initial_soc=0.5)
    split = update_soc(update_soc(s, current, dt1), current, dt2)
    joint = update_soc(s, current, dt1 + dt2)
    assert split.soc == pytest.approx(joint.soc, abs=1e-12)


# --- attack effects ---------------------------------------------------------------

def test_attack_spec_validation():
    with pytest.raises(ValueError):
        AttackSpec(onset=-1.0, drain_current=100.0, overdischarge_heat_gain=1.0)
    with pytest.raises(ValueError):
        AttackSpec(onset=900.0, drain_current=-5.0, overdischarge_heat_gain=1.0)


def test_attack_before_onset_identity():
    spec = AttackSpec(onset=900.0, drain_current=100.0,
                      overdischarge_heat_gain=1.3, multiplier=2.0)
    s = SocState(soc=0.5, capacity=120.0, initial_soc=0.5)
    total, extra = attack_effects(spec, 42.0, s, 899.0, make_params())
    assert total == 42.0
    assert extra == 0.0


def test_attack_additive_model_from_rest():
    # multiplier 1, nominal 0: the drain alone heats at heat_scale * I_a^2
    spec = AttackSpec(onset=0.0, drain_current=100.0,
                      overdischarge_heat_gain=1.3)
    s = SocState(soc=0.5, capacity=120.0, initial_soc=0.5)
    p = make_params(heat_scale=2e-6)
    total, extra = attack_effects(spec, 0.0, s, 10.0, p)
    assert total == pytest.approx(100.0)
    assert extra == pytest.approx(2e-6 * 100.0**2)


def test_attack_multiplier_and_difference_form():
    spec = AttackSpec(onset=0.0, drain_current=50.0,
                      overdischarge_heat_gain=1.3, multiplier=1.5)
    s = SocState(soc=0.2, capacity=120.0, initial_soc=0.2)
    p = make_params(heat_scale=2e-6)
    total, extra = attack_effects(spec, 80.0, s, 10.0, p)
    assert total == pytest.approx(1.5 * 80.0 + 50.0)
    assert extra == pytest.approx(2e-6 * (170.0**2 - 80.0**2))


def test_attack_overdischarge_term():
    spec = AttackSpec(onset=0.0, drain_current=100.0,
                      overdischarge_heat_gain=1.3)
    p = make_params(heat_scale=2e-6)
    depleted = SocState(soc=-0.04, capacity=120.0, initial_soc=0.25)
    healthy = SocState(soc=0.04, capacity=120.0, initial_soc=0.25)
    _, extra_depleted = attack_effects(spec, 0.0, depleted, 10.0, p)
    _, extra_healthy = attack_effects(spec, 0.0, healthy, 10.0, p)
    assert extra_depleted == pytest.approx(extra_healthy + 1.3 * 0.04)


def test_attack_continuous_at_zero_soc():
    spec = AttackSpec(onset=0.0, drain_current=100.0,
                      overdischarge_heat_gain=1.3)
    p = make_params()
    base = attack_effects(
        spec, 0.0, SocState(soc=0.0, capacity=120.0, initial_soc=0.25), 10.0, p
    )[1]
    for eps in (1e-3, 1e-6, 1e-9):
        below = attack_effects(
            spec, 0.0, SocState(soc=-eps, capacity=120.0, initial_soc=0.25),
            10.0, p,
        )[1]
        assert abs(below - base) <= 1.3 * eps + 1e-15


def test_attack_heat_increases_after_depletion():
    # under constant drain the overdischarge depth grows linearly, so the
    # extra heat is constant until SOC crosses zero and strictly rises after
    spec = AttackSpec(onset=0.0, drain_current=100.0,
                      overdischarge_heat_gain=1.3)
    p = make_params()
    s = SocState(soc=0.01, capacity=120.0, initial_soc=0.01)
    extras, socs = [], []
    t, dt = 0.0, 5.0
    for _ in range(20):
        total, extra = attack_effects(spec, 0.0, s, t, p)
        extras.append(extra)
        socs.append(s.soc)
        s = update_soc(s, total, dt)
        t += dt
    socs = np.array(socs)
    extras = np.array(extras)
    pre = socs >= 0.0
    assert np.all(extras[pre] == extras[0])
    post = np.flatnonzero(~pre)
    assert post.size >= 2
    assert np.all(np.diff(extras[post]) > 0.0)

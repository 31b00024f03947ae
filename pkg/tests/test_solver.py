"""Implicit stepper for the boundary-cooled error PDE.

Oracles, all written independently of the implementation:

* hand-computed ghost-elimination matrix entries at N=5;
* insulated cosine decay  h = exp(-alpha pi^2 t / L^2) cos(pi x / L);
* insulated uniform heating identity  h = q t (exact for the scheme);
* a manufactured quadratic solution driving the coolant-command path;
* eigenfunction decay for the rate-feedback (dynamic) boundary condition,
  with the eigenvalue found by bisection on the transcendental boundary
  equation inside the test.
"""

import numpy as np
import pytest
import scipy.linalg

from thermsafe.control import Gains
from thermsafe.grid import Field, PhysicalParams, build_grid
from thermsafe.solver import (
    SolverError,
    StepInputs,
    assemble_system,
    step,
)


def make_params(alpha=0.01, k_bc=1.0, length=1.0):
    return PhysicalParams(alpha=alpha, k_bc=k_bc, length=length,
                          heat_scale=5e-6, t_desired=298.0, h_max=15.0)


STSFC = Gains(mu1=-1.0, mu2=-2.0, mu3=-2.0, beta1=-1.0, beta2=-2.0,
              beta3=-2.0)


def run_free(op, h0, n_steps, grid, u=None, d=None, cmds=(0.0, 0.0)):
    """March n_steps with constant inputs, no noise."""
    n = grid.n_nodes
    u = np.zeros(n) if u is None else u
    d = np.zeros(n) if d is None else d
    f = Field(h0, 0.0, grid)
    inp = StepInputs(u_field=u, d_field=d, coolant_cmd=cmds)
    for _ in range(n_steps):
        f = step(op, f, inp)
    return f


# --- assembled matrix, hand oracle ------------------------------------------

def test_assembled_matrix_matches_hand_ghost_algebra():
    # N=5, L=1 -> dx=0.25; alpha=0.01, k=1, dt=0.1, Crank-Nicolson theta=0.5
    # r = alpha/dx^2 = 0.16; b = 2 alpha k / dx = 0.08
    # row 0 of A: diag -2r - b(1-mu1), super 2r, column m=2 gets +b*mu3
    # mass: M00 = 1 - b*mu2
    # with mu = beta = (-1, -2, -2):
    #   A00 = -0.32 - 0.08*2 = -0.48, A01 = 0.32, A0m = -0.16, M00 = 1.16
    #   lhs = M - 0.05*A, rhs = M + 0.05*A
    p = make_params()
    g = build_grid(5, 1.0)
    op = assemble_system(p, STSFC, g, dt=0.1, scheme="crank-nicolson")
    lhs = op.lhs.toarray()
    rhs = op.rhs.toarray()

    assert lhs[0, 0] == pytest.approx(1.16 + 0.05 * 0.48)
    assert lhs[0, 1] == pytest.approx(-0.05 * 0.32)
    assert lhs[0, 2] == pytest.approx(0.05 * 0.16)  # -theta*dt*(b*mu3)
    assert lhs[0, 3] == 0.0 and lhs[0, 4] == 0.0
    assert rhs[0, 0] == pytest.approx(1.16 - 0.05 * 0.48)
    assert rhs[0, 2] == pytest.approx(-0.05 * 0.16)

    # interior row 1: A = 0.16 * (1, -2, 1)
    assert lhs[1, 0] == pytest.approx(-0.05 * 0.16)
    assert lhs[1, 1] == pytest.approx(1.0 + 0.05 * 0.32)
    assert lhs[1, 2] == pytest.approx(-0.05 * 0.16)

    # symmetric hot end: row 4 mirrors row 0, coupling at column m
    assert lhs[4, 4] == pytest.approx(1.16 + 0.05 * 0.48)
    assert lhs[4, 3] == pytest.approx(-0.05 * 0.32)
    assert lhs[4, 2] == pytest.approx(0.05 * 0.16)

    # boundary forcing coefficient used for coolant commands
    assert op.bcoef == pytest.approx(0.08)


def test_zero_gain_zero_k_is_pure_neumann_heat_operator():
    # k_bc=0 with zero gains must reduce to the insulated-Neumann stencil:
    # row 0 of A = (-2r, 2r, 0, ...), mass = identity
    p = make_params(alpha=0.5, k_bc=0.0)
    g = build_grid(7, 1.0)
    op = assemble_system(p, Gains.zeros(), g, dt=0.01, scheme="backward-euler")
    r = 0.5 / g.dx**2
    A_expected = np.zeros((7, 7))
    for i in range(1, 6):
        A_expected[i, i - 1 : i + 2] = (r, -2 * r, r)
    A_expected[0, 0], A_expected[0, 1] = -2 * r, 2 * r
    A_expected[6, 6], A_expected[6, 5] = -2 * r, 2 * r
    lhs_expected = np.eye(7) - 0.01 * A_expected
    assert np.allclose(op.lhs.toarray(), lhs_expected, atol=1e-14)


def test_zero_gains_in_matrix_equals_command_plant():
    # the measured-mode plant operator is exactly the zero-gain closed loop
    p = make_params()
    g = build_grid(9, 1.0)
    op_zero = assemble_system(p, Gains.zeros(), g, dt=0.1)
    r, b = p.alpha / g.dx**2, 2 * p.alpha * p.k_bc / g.dx
    A_row0 = np.zeros(9)
    A_row0[0], A_row0[1] = -2 * r - b, 2 * r
    lhs_row0 = -0.5 * 0.1 * A_row0
    lhs_row0[0] += 1.0
    assert np.allclose(op_zero.lhs.toarray()[0], lhs_row0, atol=1e-14)


# --- exact invariants --------------------------------------------------------

def test_zero_state_is_fixed_point():
    p = make_params()
    g = build_grid(21, 1.0)
    op = assemble_system(p, STSFC, g, dt=0.1)
    f = run_free(op, np.zeros(21), 50, g)
    assert np.all(f.values == 0.0)
    assert f.time == pytest.approx(5.0)


@pytest.mark.parametrize("scheme", ["crank-nicolson", "backward-euler"])
def test_uniform_heating_identity(scheme):
    # insulated ends (k_bc=0), constant source q: h(t) = q*t exactly at every
    # node for either scheme, because the operator annihilates constants
    p = make_params(k_bc=0.0)
    g = build_grid(51, 1.0)
    q = 0.37
    op = assemble_system(p, Gains.zeros(), g, dt=0.1, scheme=scheme)
    f = run_free(op, np.zeros(51), 140, g, u=np.full(51, q))
    assert np.allclose(f.values, q * 14.0, atol=1e-9)


def test_cosine_decay_insulated():
    # k_bc=0, alpha=1, L=1, h0=cos(pi x): exact h = exp(-pi^2 t) cos(pi x)
    p = make_params(alpha=1.0, k_bc=0.0)
    g = build_grid(201, 1.0)
    op = assemble_system(p, Gains.zeros(), g, dt=1e-4)
    f = run_free(op, np.cos(np.pi * g.x), 1000, g)
    exact = np.exp(-np.pi**2 * 0.1) * np.cos(np.pi * g.x)
    rel = np.max(np.abs(f.values - exact)) / np.max(np.abs(exact))
    assert rel < 1e-3


def test_cosine_decay_spatial_order_two():
    # halving dx with dt ~ dx^2 must cut the error ~4x
    p = make_params(alpha=1.0, k_bc=0.0)
    errs = []
    for n in (11, 21, 41):
        g = build_grid(n, 1.0)
        dt = g.dx**2 / 2.0
        n_steps = round(0.1 / dt)
        op = assemble_system(p, Gains.zeros(), g, dt=dt)
        f = run_free(op, np.cos(np.pi * g.x), n_steps, g)
        exact = np.exp(-np.pi**2 * f.time) * np.cos(np.pi * g.x)
        errs.append(np.max(np.abs(f.values - exact)))
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 <= coarse / fine <= 4.5


@pytest.mark.parametrize("scheme,expected", [("backward-euler", 2.0),
                                             ("crank-nicolson", 4.0)])
def test_temporal_order(scheme, expected):
    # order measured against a fine-dt reference on the same grid, which
    # isolates the time discretization from the spatial one
    p = make_params(alpha=1.0, k_bc=0.0)
    g = build_grid(41, 1.0)
    h0 = np.cos(np.pi * g.x)

    def solve(dt):
        n_steps = round(0.096 / dt)
        op = assemble_system(p, Gains.zeros(), g, dt=dt, scheme=scheme)
        return run_free(op, h0, n_steps, g).values

    ref = solve(1e-4)
    errs = [np.max(np.abs(solve(dt) - ref)) for dt in (8e-3, 4e-3, 2e-3)]
    for coarse, fine in zip(errs, errs[1:]):
        assert errs[0] > 1e-8
        assert coarse / fine == pytest.approx(expected, rel=0.3)


# --- coolant-command (measured-mode) boundary path ---------------------------

def test_manufactured_solution_with_coolant_commands():
    # h*(x,t) = exp(-t) (1 + x + x^2) satisfies
    #   h_t = alpha h_xx + S   with S = -h* - 2 alpha exp(-t)
    #   h_x(0) = k (h(0) - u1)  with u1 = (1 - 1/k) exp(-t)
    #   h_x(L) = k (u2 - h(L))  with u2 = (3 + 3/k) exp(-t)   (L = 1)
    # quadratics make every spatial stencil exact, so the only error is the
    # O(dt^2) Crank-Nicolson time error
    p = make_params(alpha=0.05, k_bc=2.0)
    g = build_grid(41, 1.0)
    dt = 1e-3
    op = assemble_system(p, Gains.zeros(), g, dt=dt)
    poly = 1.0 + g.x + g.x**2
    f = Field(poly.copy(), 0.0, g)
    for n in range(500):
        tm = (n + 0.5) * dt  # midpoint evaluation matches Crank-Nicolson
        e = np.exp(-tm)
        src = -e * poly - 2 * p.alpha * e
        u1 = (1.0 - 1.0 / p.k_bc) * e
        u2 = (3.0 + 3.0 / p.k_bc) * e
        f = step(op, f, StepInputs(u_field=src, d_field=np.zeros(41),
                                   coolant_cmd=(u1, u2)))
    exact = np.exp(-0.5) * poly
    assert np.max(np.abs(f.values - exact)) < 5e-7


# --- dynamic (rate-feedback) boundary condition -------------------------------

def _symmetric_eigenvalue(p, gains, lo=1e-3, hi=None):
    """Smallest omega > 0 with phi = cos(omega (x - L/2)) an exact mode.

    Plugging h = exp(s t) phi(x), s = -alpha omega^2, into the closed-loop
    boundary condition at x = L (the x = 0 condition holds by symmetry when
    mu = beta) gives the transcendental equation

        omega sin(omega L / 2)
          + k [ (beta1 - 1 - alpha omega^2 beta2) cos(omega L / 2) + beta3 ] = 0
    """
    L, k, a = p.length, p.k_bc, p.alpha

    def F(w):
        return (w * np.sin(w * L / 2)
                + k * ((gains.beta1 - 1 - a * w**2 * gains.beta2)
                       * np.cos(w * L / 2) + gains.beta3))

    if hi is None:
        hi = lo
        while F(hi) * F(lo) > 0:
            hi *= 1.5
            assert hi < 1e3, "no sign change found"
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if F(lo) * F(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_dynamic_boundary_eigen_decay():
    # start on an exact symmetric eigenfunction of the full closed loop
    # (all six gains active through the boundary) and check the decay rate
    p = make_params()
    w = _symmetric_eigenvalue(p, STSFC)
    s = -p.alpha * w**2
    g = build_grid(201, 1.0)
    phi = np.cos(w * (g.x - 0.5))
    dt = 1e-3
    op = assemble_system(p, STSFC, g, dt=dt)
    f = run_free(op, phi.copy(), 2000, g)
    exact = np.exp(s * 2.0) * phi
    rel = np.max(np.abs(f.values - exact)) / np.max(np.abs(exact))
    assert rel < 1e-3


def test_dynamic_boundary_spatial_order_two():
    p = make_params()
    w = _symmetric_eigenvalue(p, STSFC)
    s = -p.alpha * w**2
    errs = []
    for n in (25, 49, 97):
        g = build_grid(n, 1.0)
        phi = np.cos(w * (g.x - 0.5))
        dt = g.dx**2 / 4.0
        op = assemble_system(p, STSFC, g, dt=dt)
        f = run_free(op, phi.copy(), round(2.0 / dt), g)
        errs.append(np.max(np.abs(f.values - np.exp(s * f.time) * phi)))
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.2 <= coarse / fine <= 4.8


def test_s_norm_nonincreasing_for_certified_gains():
    from thermsafe.grid import s_norm

    p = make_params()
    g = build_grid(101, 1.0)
    op = assemble_system(p, STSFC, g, dt=0.1)
    f = Field(4.0 + 3.0 * np.cos(np.pi * g.x), 0.0, g)
    inp = StepInputs(u_field=np.zeros(101), d_field=np.zeros(101))
    prev = s_norm(f.values, g)
    f = step(op, f, inp)  # first step may reshape the profile
    prev = s_norm(f.values, g)
    for _ in range(300):
        f = step(op, f, inp)
        cur = s_norm(f.values, g)
        assert cur <= prev * (1 + 1e-12)
        prev = cur


# --- error handling -----------------------------------------------------------

def test_rejects_nonpositive_dt():
    p, g = make_params(), build_grid(11, 1.0)
    with pytest.raises(ValueError):
        assemble_system(p, Gains.zeros(), g, dt=0.0)
    with pytest.raises(ValueError):
        assemble_system(p, Gains.zeros(), g, dt=-0.1)


def test_rejects_unknown_scheme():
    p, g = make_params(), build_grid(11, 1.0)
    with pytest.raises(ValueError):
        assemble_system(p, Gains.zeros(), g, dt=0.1, scheme="forward-euler")


def test_rejects_singular_assembly():
    # the determinant of the step matrix is affine in mu3 (it enters one
    # entry linearly); find its root from two evaluations, then assembling at
    # that root must be rejected by the condition estimate
    p = make_params(alpha=1.0, k_bc=1.0)
    g = build_grid(5, 1.0)

    def lhs_at(mu3):
        gains = Gains(mu1=-1.0, mu2=-2.0, mu3=mu3, beta1=-1.0, beta2=-2.0,
                      beta3=-2.0)
        return assemble_system(p, gains, g, dt=0.5).lhs.toarray()

    d0 = scipy.linalg.det(lhs_at(0.0))
    d1 = scipy.linalg.det(lhs_at(1.0))
    mu3_star = -d0 / (d1 - d0)
    gains = Gains(mu1=-1.0, mu2=-2.0, mu3=mu3_star, beta1=-1.0, beta2=-2.0,
                  beta3=-2.0)
    with pytest.raises(SolverError, match="condition"):
        assemble_system(p, gains, g, dt=0.5)


def test_step_rejects_nonfinite_source():
    p, g = make_params(), build_grid(11, 1.0)
    op = assemble_system(p, Gains.zeros(), g, dt=0.1)
    bad = np.zeros(11)
    bad[4] = np.inf
    f = Field(np.zeros(11), 0.0, g)
    with pytest.raises(SolverError, match="t="):
        step(op, f, StepInputs(u_field=bad, d_field=np.zeros(11)))


def test_process_noise_reproducible():
    p, g = make_params(), build_grid(21, 1.0)
    op = assemble_system(p, Gains.zeros(), g, dt=0.1)
    inp = StepInputs(u_field=np.zeros(21), d_field=np.zeros(21))

    def run(seed):
        rng = np.random.default_rng(seed)
        f = Field(np.zeros(21), 0.0, g)
        for _ in range(10):
            f = step(op, f, inp, rng=rng, process_noise_std=0.01)
        return f.values

    assert np.array_equal(run(5), run(5))
    assert not np.array_equal(run(5), run(6))

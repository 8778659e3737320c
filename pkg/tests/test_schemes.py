import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saulyev_ac.dense import dense_triangular_oracle
from saulyev_ac.diagnostics import DMP_TOL, discrete_energy, energy_decreased
from saulyev_ac.grid import Field, Grid, sup_norm
from saulyev_ac.potentials import Potential
from saulyev_ac.schemes import (
    SWEEP_SCHEMES,
    Scheme,
    SchemeConfig,
    Stepper,
    ThresholdError,
    max_stable_tau,
    simulate,
    ss2_stages,
    step_ess1,
    step_ess1_adjoint,
    step_ss2,
    step_ss2_adjoint,
)
from saulyev_ac.solvers import NewtonConfig

POLY = Potential.poly()
LOG = Potential.log(0.8, 1.6)
STEPS = {
    Scheme.ESS1: step_ess1,
    Scheme.ESS1_ADJOINT: step_ess1_adjoint,
    Scheme.SS2: step_ss2,
    Scheme.SS2_ADJOINT: step_ss2_adjoint,
}


def random_field(grid, p, rng, frac=0.9):
    return Field(grid, rng.uniform(-frac, frac, grid.size) * p.beta)


# step-size bounds ----------------------------------------------------------

def test_threshold_ess1_example():
    g = Grid(2, 512, 1.0)
    assert max_stable_tau("ess1", g, POLY, 2.0, 0.01) == pytest.approx(0.019073486328125, rel=1e-14)


def test_threshold_adjoint_example():
    g = Grid(2, 512, 2 * math.pi)  # h = pi/256
    h = math.pi / 256
    expected = min(h**2 / (2 * h**2 + 2 * 0.0025), 0.25)
    assert max_stable_tau("ess1-adjoint", g, POLY, 2.0, 0.05) == pytest.approx(expected, rel=1e-14)
    assert max_stable_tau("ss2", g, POLY, 2.0, 0.05) == pytest.approx(2 * expected, rel=1e-14)
    assert max_stable_tau("ss2-adjoint", g, POLY, 2.0, 0.05) == pytest.approx(2 * expected, rel=1e-14)
    assert max_stable_tau("ssi1", g, POLY, 2.0, 0.05) == math.inf


def test_threshold_rejects_small_kappa():
    with pytest.raises(ThresholdError):
        max_stable_tau("ess1", Grid(1, 8, 1.0), POLY, 1.0, 0.1)


def test_stepper_rejects_large_tau():
    g = Grid(1, 16, 1.0)
    with pytest.raises(ThresholdError):
        Stepper(g, SchemeConfig("ess1", 1.0, 0.1), POLY)
    # the same step is accepted when thresholds are lifted
    Stepper(g, SchemeConfig("ess1", 1.0, 0.1, enforce_thresholds=False), POLY)


def test_cardano_needs_poly():
    with pytest.raises(ValueError):
        Stepper(Grid(1, 8, 1.0), SchemeConfig("ess1-adjoint", 1e-3, 0.1, nonlinear_solver="cardano"), LOG)


def test_scheme_tokens():
    assert Scheme.parse("ss2-adjoint") is Scheme.SS2_ADJOINT
    assert Scheme.parse("ssi1") is Scheme.SSI1_BASELINE
    with pytest.raises(ValueError):
        Scheme.parse("crank-nicolson")


def test_bad_config():
    with pytest.raises(ValueError):
        SchemeConfig("ess1", 0.0, 0.1)
    with pytest.raises(ValueError):
        SchemeConfig("ess1", 1e-3, -0.1)


# fixed points ---------------------------------------------------------------

@pytest.mark.parametrize("scheme", SWEEP_SCHEMES)
@pytest.mark.parametrize("p", [POLY, LOG], ids=["poly", "log"])
@pytest.mark.parametrize("level", [-1, 0, 1])
def test_constant_fixed_points(scheme, p, level):
    g = Grid(2, 8, 2 * math.pi)
    cfg = SchemeConfig(scheme, 0.01, 0.05)
    u = g.full(level * p.beta)
    step = STEPS[scheme]
    for _ in range(5):
        u = step(u, cfg, p)
    np.testing.assert_allclose(u.data, level * p.beta, atol=1e-12)


# dense oracle ------------------------------------------------------------------

@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("p", [POLY, LOG], ids=["poly", "log"])
def test_ess1_matches_dense_solve(rng, dim, p):
    g = Grid(dim, 6, 2 * math.pi)
    cfg = SchemeConfig("ess1", 1e-3, 0.3)
    for _ in range(5):
        u = random_field(g, p, rng)
        np.testing.assert_allclose(step_ess1(u, cfg, p).data, dense_triangular_oracle(u, cfg, p).data, atol=1e-12)


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("p", [POLY, LOG], ids=["poly", "log"])
def test_adjoint_matches_dense_solve(rng, dim, p):
    g = Grid(dim, 5, 2 * math.pi)
    cfg = SchemeConfig("ess1-adjoint", 1e-2, 0.3)
    for _ in range(5):
        u = random_field(g, p, rng)
        got = step_ess1_adjoint(u, cfg, p).data
        want = dense_triangular_oracle(u, cfg, p, "ESS1_ADJOINT").data
        np.testing.assert_allclose(got, want, atol=1e-10)


def test_cardano_sweep_matches_newton_sweep(rng):
    g = Grid(2, 16, 1.0)
    cfg = SchemeConfig("ess1-adjoint", 1e-3, 0.01, newton=NewtonConfig(tol=1e-14))
    card = replace(cfg, nonlinear_solver="cardano")
    for _ in range(5):
        u = random_field(g, POLY, rng)
        np.testing.assert_allclose(step_ess1_adjoint(u, cfg, POLY).data, step_ess1_adjoint(u, card, POLY).data, atol=1e-9)


def saulyev_loop(u, tau, h):
    """Periodic Saul'yev step, written with the Kronecker-delta wrap levels."""
    M = len(u)
    old = list(u)
    new = [0.0] * M
    lam = tau / h**2
    for i in range(M):
        right = new[0] if i == M - 1 else old[i + 1]
        left = old[M - 1] if i == 0 else new[i - 1]
        new[i] = (old[i] + lam * (right - old[i] + left)) / (1 + lam)
    return np.array(new)


@pytest.mark.parametrize("M", [4, 7, 16])
def test_linear_reduction_to_saulyev(rng, M):
    g = Grid(1, M, 1.0)
    # unbounded data, so the maximum-bound checks are off
    cfg = SchemeConfig("ess1", 0.7 * g.h**2, 1.0, kappa=0.0, enforce_thresholds=False)
    p = Potential.none()
    for _ in range(5):
        u = Field(g, rng.standard_normal(M))
        want = saulyev_loop(u.data, cfg.tau, g.h)
        np.testing.assert_allclose(step_ess1(u, cfg, p).data, want, atol=1e-13)
        np.testing.assert_allclose(dense_triangular_oracle(u, cfg, p).data, want, atol=1e-13)


# reversal -----------------------------------------------------------------------

@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("p", [POLY, LOG], ids=["poly", "log"])
def test_adjoint_identity(rng, dim, p):
    g = Grid(dim, 8, 2 * math.pi)
    tau = 1e-2
    fwd = Stepper(g, SchemeConfig("ess1", tau, 0.3, enforce_thresholds=False, newton=NewtonConfig(tol=1e-14)), p)
    for _ in range(5):
        u = random_field(g, p, rng)
        v = step_ess1_adjoint(u, SchemeConfig("ess1-adjoint", tau, 0.3, newton=NewtonConfig(tol=1e-14)), p)
        back = fwd.step(v.data, -tau)
        assert np.max(np.abs(back - u.data)) <= 1e-9


@pytest.mark.parametrize("scheme", [Scheme.SS2, Scheme.SS2_ADJOINT])
@pytest.mark.parametrize("p", [POLY, LOG], ids=["poly", "log"])
def test_ss2_time_reversal(rng, scheme, p):
    g = Grid(2, 8, 2 * math.pi)
    tau = 1e-2
    cfg = SchemeConfig(scheme, tau, 0.3, newton=NewtonConfig(tol=1e-14))
    st_ = Stepper(g, replace(cfg, enforce_thresholds=False), p)
    for _ in range(5):
        u = random_field(g, p, rng)
        v = STEPS[scheme](u, cfg, p)
        back = st_.step(v.data, -tau)
        assert np.max(np.abs(back - u.data)) <= 1e-8


def test_ss2_stages_compose(rng):
    g = Grid(2, 8, 2 * math.pi)
    cfg = SchemeConfig("ss2", 0.01, 0.1)
    u = random_field(g, POLY, rng)
    mid, end = ss2_stages(u, cfg, POLY)
    half = replace(cfg, tau=0.005)
    np.testing.assert_array_equal(mid.data, step_ess1(u, half, POLY).data)
    np.testing.assert_array_equal(end.data, step_ess1_adjoint(mid, half, POLY).data)
    np.testing.assert_array_equal(end.data, step_ss2(u, cfg, POLY).data)
    mid_a, end_a = ss2_stages(u, cfg, POLY, adjoint=True)
    np.testing.assert_array_equal(end_a.data, step_ss2_adjoint(u, cfg, POLY).data)


def test_step_does_not_mutate_input(rng):
    g = Grid(2, 8, 1.0)
    u = random_field(g, POLY, rng)
    before = u.data.copy()
    step_ss2(u, SchemeConfig("ss2", 1e-3, 0.05), POLY)
    np.testing.assert_array_equal(u.data, before)


def test_out_of_bound_input_rejected():
    g = Grid(1, 8, 1.0)
    with pytest.raises(ThresholdError):
        step_ess1(g.full(1.5), SchemeConfig("ess1", 1e-3, 0.05), POLY)


# simulate --------------------------------------------------------------------------

def test_simulate_report_count(rng):
    g = Grid(2, 8, 1.0)
    cfg = SchemeConfig("ss2", 1e-3, 0.05)
    traj = simulate(random_field(g, POLY, rng), cfg, POLY, 10 * cfg.tau)
    assert len(traj.reports) == 10
    np.testing.assert_allclose(traj.times, [k * cfg.tau for k in range(1, 11)], rtol=1e-14)
    assert [r.step_index for r in traj.reports] == list(range(1, 11))


def test_simulate_zero_field():
    g = Grid(2, 8, 1.0)
    traj = simulate(g.zeros(), SchemeConfig("ess1-adjoint", 1e-3, 0.05), LOG, 20e-3)
    assert np.all(traj.final.data == 0)
    assert traj.all_dmp_ok and traj.all_energy_decreasing


def test_simulate_snapshots_and_sink(rng):
    g = Grid(1, 16, 1.0)
    cfg = SchemeConfig("ess1", 1e-3, 0.01)
    u0 = random_field(g, POLY, rng)
    traj = simulate(u0, cfg, POLY, 10e-3, snapshot_every=5)
    assert [t for t, _ in traj.snapshots] == pytest.approx([5e-3, 10e-3])
    seen = []
    simulate(u0, cfg, POLY, 10e-3, snapshot_every=5, sink=lambda n, t, f: seen.append(n))
    assert seen == [5, 10]


def test_simulate_diag_every(rng):
    g = Grid(1, 16, 1.0)
    cfg = SchemeConfig("ess1", 1e-3, 0.01)
    traj = simulate(random_field(g, POLY, rng), cfg, POLY, 7e-3, diag_every=3)
    assert [r.step_index for r in traj.reports] == [3, 6, 7]


def test_simulate_rejects_bad_t_end():
    g = Grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        simulate(g.zeros(), SchemeConfig("ess1", 1e-3, 0.05), POLY, 0.0)


# DMP and energy decay as properties ------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(SWEEP_SCHEMES),
    st.sampled_from(["poly", "log"]),
    st.sampled_from([1, 2]),
    st.floats(min_value=0.1, max_value=1.0),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_dmp_and_energy_within_threshold(scheme, kind, dim, frac, seed):
    p = Potential.parse(kind)
    g = Grid(dim, 12, 2 * math.pi)
    eps = 0.3
    limit = max_stable_tau(scheme, g, p, p.kappa_default, eps)
    cfg = SchemeConfig(scheme, frac * limit, eps)
    u = random_field(g, p, np.random.default_rng(seed), 0.99)
    e = discrete_energy(u, p, eps)
    st_ = Stepper(g, cfg, p)
    data = u.data
    for _ in range(5):
        data = st_.step(data)
        v = Field(g, data)
        assert sup_norm(v) <= p.beta + DMP_TOL
        e_new = discrete_energy(v, p, eps)
        assert energy_decreased(e, e_new)
        e = e_new

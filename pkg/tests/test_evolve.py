from __future__ import annotations

import numpy as np
import pytest
from helpers import model_a, model_b, model_c, model_d
from hypothesis import given, settings
from hypothesis import strategies as st

from wavefront.errors import DomainError, PreconditionError, SimulationError
from wavefront.evolve import (
    DelayHistory,
    ModelSpec,
    State,
    limit_operator_estimate,
    moving_frame_map,
    simulate,
    solution_map,
    stable_dt,
    step,
)
from wavefront.gridfn import EDGE, Grid, GridFunction, translate
from wavefront.hypotheses import Lcg64, random_pair
from wavefront.kernels import Kernel
from wavefront.nonlinearity import KppReaction, ShiftProfile, bump_fixture, shifted_logistic

G = Grid.from_bounds(-30.0, 30.0, 0.1)


# ---------------------------------------------------------------------------
# step size


def test_stable_dt_examples():
    assert stable_dt(model_a(), G) == pytest.approx(0.0045)
    assert stable_dt(model_a(tau=1.0), G) == pytest.approx(1.0 / 223.0)
    f = shifted_logistic(ShiftProfile.constant(1.0), 1.0)
    assert f.lip == pytest.approx(2.0)
    b = ModelSpec("B", 1.0, mu=1.0, kernel=Kernel.gaussian(1.0), f=f)
    assert stable_dt(b, G) == pytest.approx(0.3)


def test_model_validation():
    with pytest.raises(DomainError):
        ModelSpec("B", 1.0, mu=1.0, kernel=Kernel.dirac(), f=shifted_logistic(ShiftProfile.constant(1.0), 1.0))
    with pytest.raises(DomainError):
        ModelSpec("C", 1.0, mu=1.0, f=shifted_logistic(ShiftProfile.smoothstep(-0.5, 1.0), 1.0))
    with pytest.raises(DomainError):
        ModelSpec("E", 1.0)


# ---------------------------------------------------------------------------
# step


@pytest.mark.parametrize("model", [model_a(), model_b(), model_c(), model_d()], ids="ABCD")
def test_zero_is_fixed(model):
    zero = GridFunction.constant(G, 0.0, model.default_policy())
    dt = stable_dt(model, G)
    out = step(model, State(0.0, zero), dt).current
    assert np.all(out.values == 0.0)


def test_equilibrium_preserved():
    m = model_a(ShiftProfile.constant(1.0))
    u = GridFunction.constant(G, m.r_star(), EDGE)
    dt = stable_dt(m, G)
    state = State(0.0, u)
    for _ in range(20):
        state = step(m, state, dt)
        assert np.max(np.abs(state.current.values - m.r_star())) < 1e-12


def test_cfl_violation():
    m = model_a()
    with pytest.raises(PreconditionError):
        step(m, State(0.0, GridFunction.constant(G, 0.5)), 0.01)


def test_delay_step_needs_matching_history():
    m = model_a(tau=1.0)
    dt = stable_dt(m, G)
    hist = DelayHistory.constant(GridFunction.constant(G, 0.5), 10, dt)
    with pytest.raises(PreconditionError):
        step(m, State(0.0, hist.newest, hist), dt)


@pytest.mark.parametrize("model", [model_a(c=0.5), model_b(c=-0.5), model_d(ShiftProfile.smoothstep(0.5, 1.0))], ids="ABD")
def test_step_comparison_on_random_pairs(model):
    rng = Lcg64(7)
    dt = stable_dt(model, G)
    for _ in range(50):
        lo, hi = random_pair(rng, G, model.r_star())
        a = step(model, State(3.0, lo), dt).current
        b = step(model, State(3.0, hi), dt).current
        assert np.all(a.values <= b.values)


# ---------------------------------------------------------------------------
# simulate


def test_simulate_bump_grows_below_one():
    m = model_d()
    phi = bump_fixture("h", 1.0, G).with_values(bump_fixture("h", 1.0, G).values * 0.5)
    phi = GridFunction(G, phi.values, EDGE)
    rec = simulate(m, phi, 1.0)
    final = rec.final.current
    assert final.sup() > phi.sup()
    assert final.sup() <= 1.0


def test_simulate_zero_time():
    m = model_d()
    phi = GridFunction.constant(G, 0.3)
    rec = simulate(m, phi, 0.0)
    assert rec.times == [0.0]
    np.testing.assert_array_equal(rec.final.current.values, phi.values)


def test_simulate_dirichlet_wall():
    g = Grid.from_bounds(0.0, 40.0, 0.1)
    m = model_c()
    phi = GridFunction(g, np.where(g.x > 0, 0.5, 0.0), m.default_policy())
    rec = simulate(m, phi, 2.0, record_every=0.25)
    assert len(rec.times) == 9
    assert all(u.values[0] == 0.0 for u in rec.snapshots)


def test_simulate_is_deterministic():
    m = model_b(c=0.5)
    phi = GridFunction(G, np.where(G.x < 0, 0.8, 0.0), EDGE)
    a = simulate(m, phi, 3.0, record_every=1.0)
    b = simulate(m, phi, 3.0, record_every=1.0)
    assert a.times == b.times
    for u, v in zip(a.snapshots, b.snapshots):
        np.testing.assert_array_equal(u.values, v.values)


def test_simulate_with_delay_keeps_equilibrium():
    m = model_a(ShiftProfile.constant(1.0), tau=0.5)
    rec = simulate(m, GridFunction.constant(G, 1.0), 2.0)
    np.testing.assert_allclose(rec.final.current.values, 1.0, atol=1e-12)
    assert rec.final.history.m == round(0.5 / rec.dt)


def test_simulate_blow_up_reports_time():
    h = KppReaction(lambda x, u: 5.0 * np.minimum(np.asarray(u), 1e100) ** 2, lambda u: u, lambda u: u, 1.0, 1.0, 1.0, 1.0, 1.0)
    m = ModelSpec("D", 1.0, h=h)
    with pytest.raises(SimulationError) as info:
        simulate(m, GridFunction.constant(G, 10.0), 1.0)
    assert "t=" in str(info.value)


def test_positivity_and_bound():
    m = model_a(c=0.5)
    rng = Lcg64(3)
    for _ in range(5):
        lo, hi = random_pair(rng, G, m.r_star())
        u = simulate(m, hi, 2.0).final.current
        assert u.values.min() >= 0.0 and u.values.max() <= m.r_star() + 1e-12


def test_decay_from_equilibrium_is_monotone():
    m = model_a(c=0.5)
    q = moving_frame_map(m, m.c_shift, 1.0)
    u = GridFunction.constant(G, m.r_star())
    prev = u
    for _ in range(4):
        u = q(u)
        assert np.all(u.values <= prev.values)
        prev = u


# ---------------------------------------------------------------------------
# moving frame and limit maps


def test_moving_frame_zero_speed_is_solution_map():
    m = model_d(ShiftProfile.smoothstep(0.5, 1.0))
    phi = bump_fixture("h", 1.0, G)
    phi = GridFunction(G, phi.values, EDGE)
    np.testing.assert_array_equal(moving_frame_map(m, 0.0, 1.0)(phi).values, solution_map(m, 1.0)(phi).values)


def test_moving_frame_constant_equilibrium():
    m = model_d()
    u = GridFunction.constant(G, 1.0)
    for c in (0.0, 0.37, -2.0):
        np.testing.assert_allclose(moving_frame_map(m, c, 1.0)(u).values, 1.0, atol=1e-14)


def test_moving_frame_semiflow():
    # in the frame moving with the habitat the equation is autonomous
    c = 0.5  # c * t0 = 5 dx
    m = model_a(c=c)
    phi = GridFunction(G, np.where(G.x < 0, 1.0, 0.0), EDGE)
    dt = 1.0 / 250.0
    q1 = moving_frame_map(m, c, 1.0, dt=dt)
    q2 = moving_frame_map(m, c, 2.0, dt=dt)
    twice = q1(q1(phi))
    once = q2(phi)
    np.testing.assert_allclose(twice.values[50:-50], once.values[50:-50], atol=1e-8)


def test_moving_frame_needs_t0_beyond_delay():
    with pytest.raises(DomainError):
        moving_frame_map(model_a(tau=1.0), 0.0, 0.5)


def test_limit_family_translation_invariant():
    m = model_a(ShiftProfile.constant(1.0))
    phi = GridFunction(G, np.where(G.x < 0, 1.0, 0.0), EDGE)
    fam = limit_operator_estimate(m, 1.0, phi, [5.0, 10.0, 20.0], "plus")
    assert max(fam.cauchy_differences()) < 1e-10


def test_limit_family_plus_agrees_far_out():
    m = model_a()
    phi = GridFunction(G, np.where(G.x < 0, 1.0, 0.0), EDGE)
    ys = [G.x_max + 10.0, G.x_max + 20.0, G.x_max + 30.0]
    fam = limit_operator_estimate(m, 1.0, phi, ys, "plus")
    assert max(fam.cauchy_differences()) < 1e-6


def test_limit_family_minus_decays():
    m = model_a()
    phi = GridFunction.constant(G, 1.0)
    fam = limit_operator_estimate(m, 1.0, phi, [G.x_max + 10.0, G.x_max + 20.0], "minus")
    u = phi
    for _ in range(8):
        u = fam.operator(u)
    assert u.sup() < 0.05


def test_limit_family_rejects_bad_ys():
    m = model_a()
    phi = GridFunction.constant(G, 1.0)
    with pytest.raises(DomainError):
        limit_operator_estimate(m, 1.0, phi, [10.0, 5.0], "plus")
    with pytest.raises(DomainError):
        limit_operator_estimate(m, 1.0, phi, [-1.0], "minus")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.integers(-40, 40))
def test_frame_map_commutes_with_translation_for_homogeneous_models(seed, k):
    m = model_d()
    g = Grid.from_bounds(-20.0, 20.0, 0.25)
    lo, _ = random_pair(Lcg64(seed), g, 1.0)
    q = moving_frame_map(m, 0.0, 0.25)
    y = k * g.dx
    lhs = translate(q(lo), y)
    rhs = q(translate(lo, y))
    inner = slice(60, -60)
    np.testing.assert_allclose(lhs.values[inner], rhs.values[inner], atol=1e-12)

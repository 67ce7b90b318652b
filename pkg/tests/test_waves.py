from __future__ import annotations

import math

import numpy as np
import pytest
from helpers import model_c
from hypothesis import given, settings
from hypothesis import strategies as st

from wavefront.errors import PreconditionError
from wavefront.evolve import moving_frame_map, simulate
from wavefront.gridfn import EDGE, Grid, GridFunction
from wavefront.hypotheses import Lcg64, random_pair
from wavefront.kernels import Kernel
from wavefront.nonlinearity import ShiftProfile, heterogeneous_logistic, shifted_logistic
from wavefront.evolve import ModelSpec
from wavefront.waves import (
    K_apply,
    L_apply,
    SteadyParams,
    WaveParams,
    dirichlet_mild_oracle,
    dirichlet_steady_oracle,
    monotone_wave_iterate,
    nonlocal_wave_map,
    steady_residual,
    verify_connection,
    wave_map,
)

G = Grid.from_bounds(-60.0, 60.0, 0.1)
HOMOGENEOUS = WaveParams(1.0, 1.0, Kernel.gaussian(1.0), shifted_logistic(ShiftProfile.constant(1.0), 1.0))
HABITAT = WaveParams(1.0, 1.0, Kernel.gaussian(1.0), shifted_logistic(ShiftProfile.smoothstep(-0.5, 1.0), 1.0))


# ---------------------------------------------------------------------------
# L and K


@pytest.mark.parametrize("c", [-2.0, -0.3, 0.0, 0.7, 5.0])
def test_L_preserves_constants(c):
    one = GridFunction.constant(G, 1.0)
    np.testing.assert_allclose(L_apply(one, c, 1.0, 1.0).values, 1.0, atol=1e-10)


def test_L_on_heaviside():
    phi = GridFunction(G, np.where(G.x >= 0, 1.0, 0.0), EDGE)
    c, d, mu = 0.8, 1.0, 1.0
    exact = np.minimum(1.0, np.exp((d + mu) / c * G.x))
    np.testing.assert_allclose(L_apply(phi, c, d, mu).values, exact, atol=1e-8)


def test_L_zero_speed_is_identity():
    phi = GridFunction(G, np.sin(G.x) ** 2, EDGE)
    assert L_apply(phi, 0.0, 1.0, 1.0) is phi


def test_K_fixed_points():
    u = GridFunction.constant(G, 1.0)
    np.testing.assert_allclose(K_apply(u, 0.5, HOMOGENEOUS).values, 1.0, atol=1e-12)
    z = GridFunction.constant(G, 0.0)
    assert np.all(K_apply(z, 0.5, HABITAT).values == 0.0)
    np.testing.assert_allclose(nonlocal_wave_map(u, 0.5, HOMOGENEOUS).values, 1.0, atol=1e-10)
    assert np.all(nonlocal_wave_map(z, 0.5, HABITAT).values == 0.0)


@pytest.mark.parametrize("tau", [0.0, 0.7])
def test_K_and_Q_order_preserving(tau):
    p = WaveParams(1.0, 1.0, Kernel.gaussian(1.0), HABITAT.f, tau)
    rng = Lcg64(11)
    for _ in range(50):
        lo, hi = random_pair(rng, G, 1.0)
        assert np.all(K_apply(lo, 0.6, p).values <= K_apply(hi, 0.6, p).values)
        assert np.all(nonlocal_wave_map(lo, -0.6, p).values <= nonlocal_wave_map(hi, -0.6, p).values)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.0, 1.0), st.floats(-2.0, 2.0))
def test_wave_map_subhomogeneous(seed, kappa, c):
    phi, _ = random_pair(Lcg64(seed), G, 1.0)
    lhs = nonlocal_wave_map(phi.with_values(kappa * phi.values), c, HABITAT)
    rhs = kappa * nonlocal_wave_map(phi, c, HABITAT).values
    assert np.all(lhs.values >= rhs - 1e-12)


# ---------------------------------------------------------------------------
# monotone iteration


def test_identity_map():
    w = monotone_wave_iterate(lambda u: u, 1.0, grid=G)
    assert w.iterations == 1 and w.residual == 0.0
    np.testing.assert_array_equal(w.profile.values, 1.0)


def test_iteration_rejects_super_solution_failure():
    with pytest.raises(PreconditionError):
        monotone_wave_iterate(lambda u: u.with_values(u.values + 0.1), 1.0, grid=G)


def test_nonconvergence_is_reported():
    w = monotone_wave_iterate(wave_map(1.0, HABITAT), 1.0, grid=G, max_iter=3)
    assert not w.converged and w.iterations == 3


@pytest.fixture(scope="module")
def forced_wave():
    return monotone_wave_iterate(wave_map(1.0, HABITAT), 1.0, tol=1e-10, grid=G, speed=1.0, record_steps=True)


def test_forced_wave_converges(forced_wave):
    w = forced_wave
    assert w.converged and w.residual < 1e-8
    assert w.is_nondecreasing() and w.monotone_iterates
    assert w.residual <= w.last_step + 1e-12
    assert verify_connection(w, 1.0, 1e-3).passed


def test_iterates_nonincreasing():
    mapping = wave_map(0.5, HABITAT)
    w = GridFunction.constant(G, 1.0)
    for _ in range(10):
        nxt = mapping(w)
        assert np.all(nxt.values <= w.values + 1e-12)
        w = nxt


def test_connection_clauses(forced_wave):
    flat = monotone_wave_iterate(lambda u: u, 1.0, grid=G)
    rep = verify_connection(flat, 1.0)
    assert not rep.left_limit and rep.right_limit
    zero = monotone_wave_iterate(lambda u: u.with_values(0.0 * u.values), 1.0, grid=G)
    rep = verify_connection(zero, 1.0)
    assert rep.left_limit and not rep.right_limit


def test_wave_profile_serialisation(forced_wave):
    rows = forced_wave.rows()
    assert len(rows) == G.n and rows[0][0] == G.x_min
    meta = forced_wave.meta()
    assert set(meta) >= {"speed", "residual", "iterations", "limits", "converged"}


def test_steady_state_of_inhomogeneous_rd():
    g = Grid.from_bounds(-80.0, 80.0, 0.2)
    m = ModelSpec("D", 1.0, h=heterogeneous_logistic(ShiftProfile.smoothstep(0.5, 1.0)))
    w = monotone_wave_iterate(moving_frame_map(m, 0.0, 2.0), 1.0, tol=1e-9, max_iter=3000, grid=g)
    assert w.converged
    assert w.limits[0] == pytest.approx(0.5, abs=1e-3)
    assert w.limits[1] == pytest.approx(1.0, abs=1e-3)


# ---------------------------------------------------------------------------
# Dirichlet oracles


@pytest.fixture(scope="module")
def steady():
    p = SteadyParams(1.0, 1.0, shifted_logistic(ShiftProfile.constant(1.0), 1.0))
    return p, dirichlet_steady_oracle(p, 40.0, dx=0.05)


def test_oracle_residual(steady):
    p, w = steady
    assert steady_residual(w, p, 1.0, 39.0) < 1e-6


def test_oracle_shape(steady):
    _, w = steady
    assert w.values[0] == 0.0
    below = w.values < 1.0 - 1e-12
    assert np.all(np.diff(w.values[below]) > 0)
    assert w.values[-1] == pytest.approx(1.0, abs=1e-10)


def test_logistic_steady_state_closed_form(steady):
    # for mu f(u) - mu u = u(1 - u) with d = 1 the first integral gives
    # W'(0)^2 = 2 int_0^1 u(1-u) du = 1/3
    _, w = steady
    slope = (-25 * w.values[0] + 48 * w.values[1] - 36 * w.values[2] + 16 * w.values[3] - 3 * w.values[4]) / (12 * 0.05)
    assert slope == pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-5)


def test_mild_oracle_agrees_with_finite_differences():
    g = Grid.from_bounds(0.0, 30.0, 0.1)
    m = model_c()
    p = SteadyParams(m.d, m.mu, m.f)
    phi = GridFunction(g, np.where(g.x > 0, 0.5 * np.minimum(1.0, g.x / 5.0), 0.0), m.default_policy())
    mild = dirichlet_mild_oracle(p, phi, 2.0, 0.01)
    fd = simulate(m, phi, 2.0).final.current
    inner = g.x <= 20
    assert np.max(np.abs(mild.values[inner] - fd.values[inner])) < 5e-3

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavefront.errors import DomainError, PreconditionError, RangeError
from wavefront.gridfn import EDGE, ZERO, Grid, GridFunction
from wavefront.kernels import Kernel, convolve, heat_apply, khat, khat_quadrature


@pytest.fixture(scope="module")
def grid() -> Grid:
    return Grid.from_bounds(-40.0, 40.0, 0.05)


def test_gaussian_kernel_invariants():
    k = Kernel.gaussian(1.0)
    w = k.weights(0.05)
    assert abs(w.sum() - 1.0) < 1e-10
    np.testing.assert_array_equal(w, w[::-1])
    assert np.all(w >= 0)
    assert k.cutoff == pytest.approx(8.0 * math.sqrt(2.0))
    assert k.variance() == pytest.approx(2.0, rel=1e-10)


def test_tabulated_kernel_is_symmetrised_and_normalised():
    x = np.linspace(-3, 3, 61)
    k = Kernel.tabulated(x, np.exp(-np.abs(x)) * (1 + 0.1 * np.sign(x)))
    w = k.weights(0.1)
    np.testing.assert_array_equal(w, w[::-1])
    assert abs(w.sum() - 1.0) < 1e-12
    with pytest.raises(DomainError):
        Kernel.tabulated(x, -np.ones_like(x))


def test_convolve_dirac_is_identity(grid):
    u = GridFunction(grid, np.sin(grid.x), EDGE)
    assert convolve(Kernel.dirac(), u) is u


def test_convolve_constant(grid):
    u = GridFunction.constant(grid, 0.7, EDGE)
    np.testing.assert_allclose(convolve(Kernel.gaussian(1.0), u).values, 0.7, atol=1e-10)


def test_convolve_heaviside_midpoint(grid):
    u = GridFunction(grid, np.where(grid.x > 0, 1.0, np.where(grid.x == 0, 0.5, 0.0)), EDGE)
    out = convolve(Kernel.gaussian(1.0), u)
    assert abs(out.evaluate(0.0) - 0.5) < 1e-8


def test_convolve_cutoff_too_large():
    g = Grid.from_bounds(-5.0, 5.0, 0.1)
    with pytest.raises(DomainError):
        convolve(Kernel.gaussian(1.0), GridFunction.constant(g, 1.0))


def test_khat_values():
    g = Kernel.gaussian(1.0)
    assert khat(g, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert khat(Kernel.dirac(), 3.7) == 1.0
    assert khat(g, 1.0) == pytest.approx(math.e, rel=1e-15)
    assert abs(khat_quadrature(g, 1.0) - math.e) < 1e-9
    with pytest.raises(RangeError):
        khat(g, 40.0)


def test_khat_tabulated_matches_quadrature_and_decay_guard():
    x = np.linspace(-16, 16, 3201)
    k = Kernel.tabulated(x, np.exp(-x * x / 4.0))
    assert khat(k, 0.5) == pytest.approx(math.exp(0.25), rel=1e-8)
    with pytest.raises(PreconditionError):
        khat(k, 5.0)


def test_khat_gaussian_even_and_convex():
    g = Kernel.gaussian(0.7)
    rho = np.linspace(-3, 3, 61)
    vals = np.array([khat(g, r) for r in rho])
    assert all(khat(g, r) == khat(g, -r) for r in rho)
    assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] > 0)


def test_heat_dirichlet_vanishes_at_origin(grid):
    phi = GridFunction(grid, np.where(grid.x > 0, 1.0, 0.0), ZERO)
    out = heat_apply("dirichlet_half_line", 0.5, 1.0, 2.0, phi)
    assert out.evaluate(0.0) == 0.0
    assert np.all(out.values[grid.x < 0] == 0.0)


def test_heat_whole_line_constant(grid):
    phi = GridFunction.constant(grid, 1.0, EDGE)
    out = heat_apply("whole_line", 0.3, 1.0, 2.0, phi)
    np.testing.assert_allclose(out.values, math.exp(-0.6), atol=1e-9)


def test_heat_zero_time_returns_input(grid):
    phi = GridFunction(grid, np.exp(-grid.x**2), ZERO)
    assert heat_apply("whole_line", 1.0, 1.0, 0.0, phi) is phi


_G = Grid.from_bounds(-20.0, 20.0, 0.1)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8), st.floats(0, 5), st.floats(0, 5))
def test_heat_shifted_monotone_in_z(coeffs, z1, z2):
    z, zt = sorted((z1, z2))
    vals = np.interp(_G.x, np.linspace(-20, 20, 8), coeffs)
    phi = GridFunction(_G, vals, ZERO)
    lo = heat_apply("shifted", 0.2, 1.0, 1.0, phi, z)
    hi = heat_apply("shifted", 0.2, 1.0, 1.0, phi, zt)
    whole = heat_apply("whole_line", 0.2, 1.0, 1.0, phi)
    dirichlet = heat_apply("dirichlet_half_line", 0.2, 1.0, 1.0, phi)
    assert np.all(lo.values <= hi.values + 1e-15)
    assert np.all(hi.values <= whole.values + 1e-15)
    assert np.all(dirichlet.values <= lo.values + 1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.lists(st.floats(0, 1), min_size=6, max_size=6))
def test_convolve_order_preserving(a, b):
    g = Grid.from_bounds(-15.0, 15.0, 0.1)
    ua = np.interp(g.x, np.linspace(-15, 15, 6), a)
    ub = np.interp(g.x, np.linspace(-15, 15, 6), b)
    lo = GridFunction(g, np.minimum(ua, ub), EDGE)
    hi = GridFunction(g, np.maximum(ua, ub), EDGE)
    k = Kernel.gaussian(0.5)
    cl, ch = convolve(k, lo), convolve(k, hi)
    assert np.all(cl.values <= ch.values) and np.all(cl.values >= 0)

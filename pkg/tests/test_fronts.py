from __future__ import annotations

import math

import numpy as np
import pytest
from helpers import model_d
from hypothesis import given, settings
from hypothesis import strategies as st

from wavefront.errors import DomainError
from wavefront.evolve import RunRecord, simulate
from wavefront.fronts import (
    Curve,
    FrontTrace,
    empirical_speed,
    interval_convergence,
    level_position,
    tail_decay,
)
from wavefront.gridfn import EDGE, Grid, GridFunction

G = Grid.from_bounds(-10.0, 10.0, 0.01)


def test_level_position_examples():
    u = GridFunction(G, np.minimum(1.0, np.exp(-G.x)), EDGE)
    assert abs(level_position(u, 0.5) - math.log(2.0)) < G.dx
    assert level_position(GridFunction.constant(G, 0.0), 0.5) is None
    assert level_position(GridFunction.constant(G, 1.0), 0.5) == G.x_max
    assert level_position(GridFunction.constant(G, 1.0), 0.5, "leftmost") == G.x_min
    with pytest.raises(DomainError):
        level_position(u, 0.0)


def _trace(times, positions):
    tr = FrontTrace(0.5)
    tr.times = list(times)
    tr.positions = list(positions)
    return tr


def test_empirical_speed_exact_line():
    t = np.arange(20.0, 61.0)
    fit = empirical_speed(_trace(t, 2 * t + 1), (20, 60))
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.stderr == pytest.approx(0.0, abs=1e-12)
    assert empirical_speed(_trace(t, np.full_like(t, 3.0)), (20, 60)).slope == pytest.approx(0.0, abs=1e-14)


def test_empirical_speed_needs_points():
    with pytest.raises(DomainError):
        empirical_speed(_trace([20, 21, 22], [1, 2, 3]), (20, 60))
    with pytest.raises(DomainError):
        empirical_speed(_trace(range(20, 30), [1.0] * 9 + [None]), (20, 60))


def test_trace_times_must_increase():
    tr = FrontTrace(0.5)
    u = GridFunction.constant(G, 1.0)
    tr(1.0, u)
    with pytest.raises(DomainError):
        tr(1.0, u)


def _record(times, snapshots) -> RunRecord:
    rec = RunRecord(model_d(), 0.01)
    rec.times.extend(times)
    rec.snapshots.extend(snapshots)
    return rec


def test_interval_convergence_trivial_and_empty():
    g = Grid.from_bounds(-50.0, 50.0, 0.5)
    one = GridFunction.constant(g, 1.0)
    rec = _record([1.0, 2.0, 5.0], [one] * 3)
    assert interval_convergence(rec, 1.0, -2, 2, 0.4).values == (0.0, 0.0, 0.0)
    assert len(interval_convergence(rec, 1.0, -2, 2, 2.0)) == 0
    prof = GridFunction(g, np.full(g.n, 1.0), EDGE)
    assert interval_convergence(rec, prof, -2, 2, 0.4).values == (0.0, 0.0, 0.0)


def test_tail_decay_zero_data():
    g = Grid.from_bounds(-50.0, 50.0, 0.5)
    zero = GridFunction.constant(g, 0.0)
    rec = _record([1.0, 2.0], [zero, zero])
    assert tail_decay(rec, 0.5, 0.2).values == (0.0, 0.0)
    assert tail_decay(rec, 0.0, 0.2, "outside_cone", (-2, 2)).values == (0.0, 0.0)
    with pytest.raises(DomainError):
        tail_decay(rec, 0.0, 0.2, "outside_cone")


def test_curve_lookup():
    c = Curve((1.0, 2.0), (5.0, 6.0))
    assert c.at(2.0) == 6.0 and c.rows() == [[1.0, 5.0], [2.0, 6.0]]
    with pytest.raises(DomainError):
        c.at(1.5)


@pytest.fixture(scope="module")
def logistic_run():
    g = Grid.from_bounds(-150.0, 150.0, 0.1)
    phi = GridFunction(g, np.clip(2.0 - np.abs(g.x), 0.0, 1.0), EDGE)
    right, left = FrontTrace(0.5), FrontTrace(0.5, "leftmost")
    rec = simulate(model_d(), phi, 60.0, [right, left], record_every=1.0)
    return rec, right, left


@pytest.mark.slow
def test_logistic_front_speed(logistic_run):
    _, right, left = logistic_run
    for tr in (right, left):
        slope = abs(empirical_speed(tr, (20, 60)).slope)
        assert abs(slope - 2.0) <= 0.08 * 2.0


@pytest.mark.slow
def test_logistic_interval_and_cone(logistic_run):
    rec, _, _ = logistic_run
    e = interval_convergence(rec, 1.0, -2.0, 2.0, 0.4)
    assert e.at(60.0) < 0.05
    m = tail_decay(rec, 0.0, 0.2, "outside_cone", (-2.0, 2.0))
    late = [v for t, v in zip(m.times, m.values) if t >= 20]
    assert all(b <= a + 1e-12 for a, b in zip(late, late[1:]))
    assert m.at(60.0) < 0.02


@pytest.mark.slow
def test_interval_self_consistency(logistic_run):
    rec, _, _ = logistic_run
    plateau = float(rec.snapshots[-1].values[rec.grid.index_of(0.0)])
    e = interval_convergence(rec, plateau, -2.0, 2.0, 0.4)
    assert e.at(60.0) < e.at(10.0)
    assert e.at(60.0) < 1e-2


_g = Grid.from_bounds(-5.0, 5.0, 0.1)


@settings(max_examples=40)
@given(st.lists(st.floats(0, 1), min_size=_g.n, max_size=_g.n), st.lists(st.floats(0, 1), min_size=_g.n, max_size=_g.n), st.floats(0.05, 1.0))
def test_level_position_monotone_in_u(a, b, lam):
    lo = GridFunction(_g, np.minimum(a, b), EDGE)
    hi = GridFunction(_g, np.maximum(a, b), EDGE)
    p, q = level_position(lo, lam), level_position(hi, lam)
    if p is not None:
        assert q is not None and q >= p - 1e-12


@settings(max_examples=40)
@given(st.lists(st.floats(0, 0.1), min_size=_g.n, max_size=_g.n), st.floats(0.05, 0.95))
def test_left_and_right_crossings_of_monotone_profiles(inc, lam):
    # a monotone profile crosses each level once; both sides locate it within one cell
    rising = np.cumsum(inc)
    if rising[-1] <= 0:
        return
    rising = rising / rising[-1]
    up = GridFunction(_g, rising, EDGE)
    down = GridFunction(_g, rising[::-1].copy(), EDGE)
    left = level_position(up, lam, "leftmost")
    right = level_position(down, lam, "rightmost")
    assert left == pytest.approx(-right, abs=1e-9)
    below = np.nonzero(rising < lam)[0]
    if below.size:
        last_below = _g.x[below[-1]]
        assert last_below <= left <= last_below + _g.dx + 1e-12

"""Explicit time stepping for the four evolution models.

=====  ==============================================================
model  equation
=====  ==============================================================
A      u_t = d u_xx - mu u + mu int f(y - c t, u(t - tau, y)) k(x - y) dy
B      u_t = d (k * u - u) - mu u + mu f(x - c t, u(t - tau, x))
C      u_t = d u_xx - mu u + mu f(u(t - tau, x)),  u(t, 0) = 0
D      u_t = d u_xx + h(x, u)
=====  ==============================================================

Every scheme is forward Euler with nonnegative stencil weights under the
step restriction of :func:`stable_dt`, so each step is an order-preserving
map on the samples.  Delays are handled by the method of steps with ``dt``
dividing ``tau``.

``ModelSpec.offset`` shifts the habitat (or the Dirichlet wall for model C)
by a fixed amount: the habitat argument becomes ``x - c t + offset`` and the
wall sits at ``x = -offset``.  Solving with offset ``y`` is exactly the
conjugation ``T_{-y} P T_y``, which is how the limit operators are
approximated without moving data towards the grid boundary.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, SimulationError
from .gridfn import EDGE, ZERO_LEFT, ExtensionPolicy, Grid, GridFunction, translate
from .kernels import Kernel, convolve_values
from .nonlinearity import KppReaction, Reaction

BLOWUP = 1e12
_CFL_SAFETY = 0.9
_DIV_TOL = 1e-9

Observer = Callable[[float, GridFunction], None]


@dataclass(frozen=True, eq=False)
class ModelSpec:
    kind: str
    d: float
    mu: float = 0.0
    tau: float = 0.0
    c_shift: float = 0.0
    kernel: Kernel | None = None
    f: Reaction | None = None
    h: KppReaction | None = None
    offset: float = 0.0

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ("A", "B", "C", "D"):
            raise DomainError(f"unknown model kind {self.kind!r}")
        if not self.d > 0:
            raise DomainError("d must be positive")
        if kind == "D":
            if self.h is None:
                raise DomainError("model D needs a KppReaction h")
            return
        if not self.mu > 0:
            raise DomainError("mu must be positive")
        if self.tau < 0:
            raise DomainError("tau must be nonnegative")
        if self.f is None:
            raise DomainError(f"model {kind} needs a Reaction f")
        if kind == "A" and self.kernel is None:
            object.__setattr__(self, "kernel", Kernel.dirac())
        if kind == "B":
            if self.kernel is None or not self.kernel.variance() > 0:
                raise DomainError("model B needs a kernel with positive variance")
        if kind == "C":
            u = np.linspace(0.0, 2.0 * self.f.u_star, 17)
            if not np.allclose(self.f(-7.0, u), self.f(7.0, u), rtol=0.0, atol=1e-14):
                raise DomainError("model C needs a habitat-independent reaction")

    @property
    def has_delay(self) -> bool:
        return self.kind != "D" and self.tau > 0

    def with_offset(self, offset: float) -> ModelSpec:
        return replace(self, offset=float(offset))

    def r_star(self) -> float:
        return self.h.u_plus_star if self.kind == "D" else self.f.u_star

    def default_policy(self) -> ExtensionPolicy:
        return ZERO_LEFT if self.kind == "C" else EDGE


# ---------------------------------------------------------------------------
# step size


def _reaction_slope_bound(model: ModelSpec) -> float:
    """``max(0, -min dh/du)`` on a sample box, used only by the model D guard."""
    h = model.h
    s = np.linspace(-50.0, 50.0, 101)
    u = np.linspace(0.0, 2.0 * max(h.M_star, 1e-12), 101)
    return max(0.0, -float(np.min(h.derivative(s[:, None], u[None, :]))))


def monotone_dt_limit(model: ModelSpec, grid: Grid) -> float:
    """Largest ``dt`` for which every stencil weight of one step is nonnegative."""
    dx2 = grid.dx * grid.dx
    if model.kind == "B":
        return 1.0 / (model.d + model.mu)
    if model.kind == "D":
        return 1.0 / (2.0 * model.d / dx2 + _reaction_slope_bound(model))
    return 1.0 / (2.0 * model.d / dx2 + model.mu)


def stable_dt(model: ModelSpec, grid: Grid) -> float:
    if model.kind == "B":
        dt = _CFL_SAFETY / (model.d + model.mu * max(model.f.lip, 1.0))
    else:
        dt = _CFL_SAFETY * grid.dx * grid.dx / (2.0 * model.d)
        dt = min(dt, monotone_dt_limit(model, grid))
    if model.has_delay:
        m = math.ceil(model.tau / dt - _DIV_TOL)
        dt = model.tau / m
    return dt


def delay_steps(model: ModelSpec, dt: float) -> int:
    if not model.has_delay:
        return 0
    m = round(model.tau / dt)
    if m < 1 or abs(m * dt - model.tau) > _DIV_TOL * max(1.0, model.tau):
        raise PreconditionError(f"dt={dt} does not divide tau={model.tau}")
    return m


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class DelayHistory:
    """Samples ``u(t - tau), ..., u(t)`` spaced ``dt`` apart (oldest first)."""

    slices: tuple
    dt: float

    def __post_init__(self) -> None:
        if len(self.slices) < 1:
            raise DomainError("history needs at least one slice")
        g = self.slices[0].grid
        if any(s.grid != g for s in self.slices):
            raise DomainError("history slices must share one grid")

    @classmethod
    def constant(cls, phi: GridFunction, m: int, dt: float) -> DelayHistory:
        return cls(tuple([phi] * (m + 1)), dt)

    @property
    def m(self) -> int:
        return len(self.slices) - 1

    @property
    def tau(self) -> float:
        return self.m * self.dt

    @property
    def newest(self) -> GridFunction:
        return self.slices[-1]

    @property
    def oldest(self) -> GridFunction:
        return self.slices[0]

    def push(self, u: GridFunction) -> DelayHistory:
        if self.m == 0:
            return DelayHistory((u,), self.dt)
        return DelayHistory(self.slices[1:] + (u,), self.dt)


@dataclass(frozen=True)
class State:
    t: float
    current: GridFunction
    history: DelayHistory | None = None

    def __post_init__(self) -> None:
        if self.t < 0:
            raise DomainError("time must be nonnegative")
        if self.history is not None and self.history.newest is not self.current:
            raise DomainError("current state must be the newest history slice")

    @property
    def delayed(self) -> GridFunction:
        return self.current if self.history is None else self.history.oldest


def initial_state(model: ModelSpec, phi0, dt: float) -> State:
    if isinstance(phi0, DelayHistory):
        if model.has_delay and phi0.m != delay_steps(model, dt):
            raise PreconditionError("history length does not match tau/dt")
        return State(0.0, phi0.newest, phi0 if model.has_delay else None)
    if model.has_delay:
        hist = DelayHistory.constant(phi0, delay_steps(model, dt), dt)
        return State(0.0, phi0, hist)
    return State(0.0, phi0, None)


# ---------------------------------------------------------------------------
# right-hand sides on raw arrays


class _Stepper:
    """Precomputed pieces of one model on one grid."""

    def __init__(self, model: ModelSpec, grid: Grid, policy):
        self.model = model
        self.grid = grid
        self.policy = policy
        self.x = grid.x
        self.inv_dx2 = 1.0 / (grid.dx * grid.dx)
        k = model.kernel
        self.weights = None if (k is None or k.is_dirac) else k.weights(grid.dx)
        if self.weights is not None and k.cutoff > 0.5 * (grid.x_max - grid.x_min):
            raise DomainError("kernel cutoff exceeds the grid half-width")
        self.left_zero = policy.left.value == "zero"
        self.right_zero = policy.right.value == "zero"
        self.wall = self.x <= -model.offset + 1e-9 * grid.dx if model.kind == "C" else None

    def _edges(self, v: np.ndarray) -> tuple[float, float]:
        return (0.0 if self.left_zero else float(v[0]), 0.0 if self.right_zero else float(v[-1]))

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        lo, hi = self._edges(u)
        p = np.empty(u.size + 2)
        p[0], p[-1] = lo, hi
        p[1:-1] = u
        return (p[2:] - 2.0 * u + p[:-2]) * self.inv_dx2

    def conv(self, v: np.ndarray) -> np.ndarray:
        if self.weights is None:
            return v
        lo, hi = self._edges(v)
        return convolve_values(self.weights, v, lo, hi)

    def rhs(self, t: float, u: np.ndarray, delayed: np.ndarray) -> np.ndarray:
        m = self.model
        if m.kind == "D":
            return m.d * self.laplacian(u) + m.h(self.x + m.offset, u)
        if m.kind == "C":
            birth = m.f(0.0, delayed)
            return m.d * self.laplacian(u) - m.mu * u + m.mu * birth
        s = self.x - m.c_shift * t + m.offset
        birth = m.f(s, delayed)
        if m.kind == "A":
            return m.d * self.laplacian(u) - m.mu * u + m.mu * self.conv(birth)
        return m.d * (self.conv(u) - u) - m.mu * u + m.mu * birth

    def advance(self, t: float, u: np.ndarray, delayed: np.ndarray, dt: float) -> np.ndarray:
        new = u + dt * self.rhs(t, u, delayed)
        if self.wall is not None:
            new[self.wall] = 0.0
        return new


def _check_finite(values: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(values)) or np.max(np.abs(values)) > BLOWUP:
        raise SimulationError("state blew up or became non-finite", t)


def step(model: ModelSpec, state: State, dt: float, *, check_cfl: bool = True) -> State:
    """One forward-Euler step; the returned state owns a fresh history."""
    u = state.current
    if check_cfl and dt > monotone_dt_limit(model, u.grid) * (1.0 + 1e-12):
        raise PreconditionError(f"dt={dt} violates the stability limit {monotone_dt_limit(model, u.grid)}")
    if state.history is not None and state.history.m != delay_steps(model, dt):
        raise PreconditionError("history spacing does not match dt")
    stepper = _Stepper(model, u.grid, u.policy)
    new_vals = stepper.advance(state.t, u.values, state.delayed.values, dt)
    t_new = state.t + dt
    _check_finite(new_vals, t_new)
    new = u.with_values(new_vals)
    hist = None if state.history is None else state.history.push(new)
    return State(t_new, new, hist)


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunRecord:
    model: ModelSpec
    dt: float
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: State | None = None

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    def to_rows(self):
        """Rows ``[t, u(x_0), u(x_1), ...]`` for CSV output."""
        return [[t] + list(s.values) for t, s in zip(self.times, self.snapshots)]


def simulate(
    model: ModelSpec,
    phi0,
    T: float,
    observers: Sequence[Observer] = (),
    *,
    dt: float | None = None,
    record_every: float | None = None,
    check_cfl: bool = True,
) -> RunRecord:
    """Advance ``phi0`` to time ``T`` and record snapshots.

    Without delay the step is shrunk so that a whole number of steps lands
    on ``T``.  With delay ``dt`` must divide ``tau`` and the run ends at the
    first step time ``>= T``.  Observers and snapshots fire at ``t = 0``,
    every ``record_every`` (rounded to whole steps) and at the final time.
    """
    if T < 0:
        raise DomainError("T must be nonnegative")
    first = phi0.newest if isinstance(phi0, DelayHistory) else phi0
    grid = first.grid
    if dt is None:
        dt = stable_dt(model, grid)
    if check_cfl and dt > monotone_dt_limit(model, grid) * (1.0 + 1e-12):
        raise PreconditionError(f"dt={dt} violates the stability limit")
    if record_every is not None and not model.has_delay and T > 0:
        # land record times on exact multiples of record_every when T allows it
        ratio = T / record_every
        if abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1:
            dt = record_every / math.ceil(record_every / dt - _DIV_TOL)
    n_steps = math.ceil(T / dt - _DIV_TOL) if T > 0 else 0
    if n_steps and not model.has_delay:
        dt = T / n_steps
    state = initial_state(model, phi0, dt)
    every = n_steps if record_every is None else max(1, int(round(record_every / dt)))
    record = RunRecord(model, dt)

    def emit(t: float, u: GridFunction) -> None:
        record.times.append(t)
        record.snapshots.append(u)
        for obs in observers:
            obs(t, u)

    emit(0.0, state.current)
    if n_steps == 0:
        record.final = state
        return record

    stepper = _Stepper(model, grid, first.policy)
    policy = first.policy
    u = state.current.values
    ring = None
    if state.history is not None:
        ring = deque(s.values for s in state.history.slices)
    for n in range(1, n_steps + 1):
        t_old = (n - 1) * dt
        delayed = ring[0] if ring is not None else u
        u = stepper.advance(t_old, u, delayed, dt)
        t = n * dt
        if n % 64 == 0 or n == n_steps:
            _check_finite(u, t)
        if ring is not None:
            ring.popleft()
            ring.append(u)
        if n % every == 0 or n == n_steps:
            _check_finite(u, t)
            emit(t, GridFunction(grid, u, policy))
    last = record.snapshots[-1]
    hist = None
    if ring is not None:
        slices = [GridFunction(grid, v, policy) for v in list(ring)[:-1]] + [last]
        hist = DelayHistory(tuple(slices), dt)
    record.final = State(n_steps * dt, last, hist)
    return record


# ---------------------------------------------------------------------------
# solution maps


def solution_map(model: ModelSpec, t0: float, *, dt: float | None = None) -> Callable[[GridFunction], GridFunction]:
    """``phi -> P[t0, phi]`` with constant-in-time history."""

    def apply(phi: GridFunction) -> GridFunction:
        return simulate(model, phi, t0, dt=dt).final.current

    return apply


def moving_frame_map(
    model: ModelSpec, c: float, t0: float, *, dt: float | None = None
) -> Callable[[GridFunction], GridFunction]:
    """``phi -> T_{-c t0}[P[t0, phi]]``, the solution map seen in a frame moving at speed ``c``."""
    if model.has_delay and not t0 > model.tau:
        raise DomainError("moving_frame_map needs t0 > tau")
    if not t0 > 0:
        raise DomainError("t0 must be positive")
    base = solution_map(model, t0, dt=dt)

    def apply(phi: GridFunction) -> GridFunction:
        out = base(phi)
        return out if c == 0 else translate(out, -c * t0)

    return apply


@dataclass(frozen=True)
class LimitFamily:
    """Estimates ``T_{-+y} Q T_{+-y}[phi]`` for increasing ``y`` and the far operator."""

    sign: str
    ys: tuple
    entries: tuple
    operator: Callable[[GridFunction], GridFunction]
    model: ModelSpec
    t0: float

    def cauchy_differences(self) -> list[float]:
        return [
            float(np.max(np.abs(b.values - a.values))) for a, b in zip(self.entries[:-1], self.entries[1:])
        ]


def limit_operator_estimate(
    model: ModelSpec,
    t0: float,
    phi: GridFunction,
    y_list: Sequence[float],
    sign: str,
    *,
    dt: float | None = None,
) -> LimitFamily:
    """Approximate the limit operators ``Q_+`` (``sign='plus'``) or ``Q_-``.

    Each entry is the moving-frame map of the model with its habitat moved
    by ``+-y``, which equals ``T_{-+y} Q_{t0} T_{+-y}[phi]`` without pushing
    ``phi`` towards the edge of the grid.
    """
    if sign not in ("plus", "minus"):
        raise DomainError("sign must be 'plus' or 'minus'")
    ys = [float(y) for y in y_list]
    if not ys or ys[0] <= 0 or any(b <= a for a, b in zip(ys[:-1], ys[1:])):
        raise DomainError("y_list must be positive and increasing")
    if not all(math.isfinite(y) for y in ys):
        raise DomainError("y_list must be finite")
    sgn = 1.0 if sign == "plus" else -1.0
    entries = []
    op = None
    for y in ys:
        op = moving_frame_map(model.with_offset(model.offset + sgn * y), model.c_shift, t0, dt=dt)
        entries.append(op(phi))
    return LimitFamily(sign, tuple(ys), tuple(entries), op, model, t0)

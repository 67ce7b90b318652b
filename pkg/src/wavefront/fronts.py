"""Level-set front tracking and spreading diagnostics on recorded runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import DomainError
from .evolve import RunRecord
from .gridfn import GridFunction

DEFAULT_WINDOW = (20.0, math.inf)


def level_position(u: GridFunction, lam: float, side: str = "rightmost") -> float | None:
    """Outermost ``x`` with ``u(x) >= lam`` on the given side, linearly refined.

    Returns ``None`` when no sample reaches ``lam``.
    """
    if not lam > 0:
        raise DomainError("level must be positive")
    v = u.values
    x = u.x
    hits = np.nonzero(v >= lam)[0]
    if hits.size == 0:
        return None
    if side == "rightmost":
        i = int(hits[-1])
        if i == v.size - 1:
            return float(x[-1])
        a, b = v[i], v[i + 1]
        return float(x[i] + u.grid.dx * (a - lam) / (a - b))
    if side == "leftmost":
        i = int(hits[0])
        if i == 0:
            return float(x[0])
        a, b = v[i], v[i - 1]
        return float(x[i] - u.grid.dx * (a - lam) / (a - b))
    raise DomainError("side must be 'rightmost' or 'leftmost'")


@dataclass
class FrontTrace:
    level: float
    side: str = "rightmost"
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)

    def __call__(self, t: float, u: GridFunction) -> None:
        if self.times and t <= self.times[-1]:
            raise DomainError("front trace times must increase")
        self.times.append(float(t))
        self.positions.append(level_position(u, self.level, self.side))

    @classmethod
    def from_run(cls, run: RunRecord, level: float, side: str = "rightmost") -> FrontTrace:
        trace = cls(level, side)
        for t, u in zip(run.times, run.snapshots):
            trace(t, u)
        return trace

    def rows(self) -> list[list]:
        return [[t, p] for t, p in zip(self.times, self.positions)]


class SpeedFit(NamedTuple):
    slope: float
    stderr: float


def empirical_speed(trace: FrontTrace, window: tuple = DEFAULT_WINDOW) -> SpeedFit:
    """Least-squares slope of front position against time inside ``window``."""
    lo, hi = window
    pts = [(t, p) for t, p in zip(trace.times, trace.positions) if lo <= t <= hi]
    if len(pts) < 5 or any(p is None for _, p in pts):
        raise DomainError("need at least 5 tracked points in the window, none absent")
    t, p = np.array(pts, dtype=float).T
    fit = stats.linregress(t, p)
    return SpeedFit(float(fit.slope), float(fit.stderr))


@dataclass(frozen=True)
class Curve:
    """A diagnostic time series ``(t, value)``."""

    times: tuple
    values: tuple

    def __len__(self) -> int:
        return len(self.times)

    def at(self, t: float) -> float:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"no recorded value at t={t}")
        return self.values[i]

    def rows(self) -> list[list[float]]:
        return [[t, v] for t, v in zip(self.times, self.values)]


def interval_convergence(run: RunRecord, r_star, c_lo: float, c_hi: float, eps: float) -> Curve:
    """``sup |u(t,x) - r*|`` over ``t(c_lo + eps) <= x <= t(c_hi - eps)``.

    ``r_star`` may be a number or a profile on the run's grid (for
    inhomogeneous limits).  Times with an empty or degenerate window are skipped.
    """
    ts, vs = [], []
    for t, u in zip(run.times, run.snapshots):
        a, b = t * (c_lo + eps), t * (c_hi - eps)
        if not a < b:
            continue
        mask = (u.x >= a) & (u.x <= b)
        if not np.any(mask):
            continue
        target = r_star.values[mask] if isinstance(r_star, GridFunction) else float(r_star)
        ts.append(float(t))
        vs.append(float(np.max(np.abs(u.values[mask] - target))))
    return Curve(tuple(ts), tuple(vs))


def tail_decay(
    run: RunRecord,
    c: float = 0.0,
    eps: float = 0.0,
    side: str = "behind",
    cone: Sequence[float] | None = None,
) -> Curve:
    """``sup u(t, x)`` over a receding region.

    ``side="behind"``: ``x <= t (c - eps)``.  ``side="outside_cone"`` with
    ``cone=(c_minus, c_plus)``: ``x`` outside ``[t (c_minus - eps), t (c_plus + eps)]``.
    Times where the region misses the grid are skipped.
    """
    ts, vs = [], []
    for t, u in zip(run.times, run.snapshots):
        if side == "behind":
            mask = u.x <= t * (c - eps)
        elif side == "outside_cone":
            if cone is None:
                raise DomainError("outside_cone needs cone=(c_minus, c_plus)")
            mask = (u.x < t * (cone[0] - eps)) | (u.x > t * (cone[1] + eps))
        else:
            raise DomainError("side must be 'behind' or 'outside_cone'")
        if not np.any(mask):
            continue
        ts.append(float(t))
        vs.append(float(np.max(u.values[mask])))
    return Curve(tuple(ts), tuple(vs))

"""Sampled functions on a truncated real line.

A :class:`GridFunction` is a bounded continuous function represented by its
samples on a uniform :class:`Grid` together with an :class:`ExtensionPolicy`
that says what the function does beyond the sampled window.  Every operator
in the package that needs values off the grid (translation, convolution,
stencils) reads them through the policy, so the behaviour at +-infinity is
part of the data rather than a per-call option.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError

_SHIFT_ROUNDING = 1e-9


@dataclass(frozen=True)
class Grid:
    x_min: float
    dx: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_min) and math.isfinite(self.dx)):
            raise DomainError("grid origin and spacing must be finite")
        if self.dx <= 0:
            raise DomainError(f"dx must be positive, got {self.dx}")
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"grid needs n >= 3 samples, got {self.n}")

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, dx: float) -> Grid:
        span = (x_max - x_min) / dx
        n = int(round(span))
        if abs(span - n) > 1e-6 * max(1.0, abs(span)):
            raise DomainError(f"[{x_min}, {x_max}] is not a whole number of steps dx={dx}")
        return cls(float(x_min), float(dx), n + 1)

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @cached_property
    def x(self) -> np.ndarray:
        pts = self.x_min + self.dx * np.arange(self.n, dtype=float)
        pts.flags.writeable = False
        return pts

    def contains(self, x: float) -> bool:
        return self.x_min <= x <= self.x_max

    def index_of(self, x: float) -> int:
        """Index of the sample nearest to ``x`` (clipped to the grid)."""
        i = int(round((x - self.x_min) / self.dx))
        return min(max(i, 0), self.n - 1)


class Extension(str, enum.Enum):
    EDGE = "edge"
    ZERO = "zero"


@dataclass(frozen=True)
class ExtensionPolicy:
    left: Extension = Extension.EDGE
    right: Extension = Extension.EDGE

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", Extension(self.left))
        object.__setattr__(self, "right", Extension(self.right))


EDGE = ExtensionPolicy(Extension.EDGE, Extension.EDGE)
ZERO = ExtensionPolicy(Extension.ZERO, Extension.ZERO)
ZERO_LEFT = ExtensionPolicy(Extension.ZERO, Extension.EDGE)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray
    policy: ExtensionPolicy = field(default=EDGE)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, fn, policy: ExtensionPolicy = EDGE) -> GridFunction:
        return cls(grid, np.asarray(fn(grid.x), dtype=float) * np.ones(grid.n), policy)

    @classmethod
    def constant(cls, grid: Grid, value: float, policy: ExtensionPolicy = EDGE) -> GridFunction:
        return cls(grid, np.full(grid.n, float(value)), policy)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def left_value(self) -> float:
        return float(self.values[0]) if self.policy.left is Extension.EDGE else 0.0

    @property
    def right_value(self) -> float:
        return float(self.values[-1]) if self.policy.right is Extension.EDGE else 0.0

    def with_values(self, values: np.ndarray) -> GridFunction:
        return GridFunction(self.grid, values, self.policy)

    def is_nonnegative(self) -> bool:
        return bool(self.values.min() >= 0.0)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def padded(self, left: int, right: int) -> np.ndarray:
        """Samples extended by ``left``/``right`` ghost points from the policy."""
        return np.concatenate(
            [np.full(left, self.left_value), self.values, np.full(right, self.right_value)]
        )

    def sample_at_index(self, idx: np.ndarray) -> np.ndarray:
        """Values at integer indices, reading the extension outside [0, n-1]."""
        idx = np.asarray(idx)
        out = np.array(self.values[np.clip(idx, 0, self.grid.n - 1)], dtype=float)
        out[idx < 0] = self.left_value
        out[idx > self.grid.n - 1] = self.right_value
        return out

    def evaluate(self, x) -> np.ndarray:
        """Piecewise-linear evaluation at arbitrary points.

        Ghost samples beyond the grid carry the extension value, so the
        interpolant between the last sample and the first ghost is linear too.
        """
        p = (np.asarray(x, dtype=float) - self.grid.x_min) / self.grid.dx
        j = np.floor(p)
        w = p - j
        j = j.astype(np.int64)
        return (1.0 - w) * self.sample_at_index(j) + w * self.sample_at_index(j + 1)


def translate(u: GridFunction, y: float) -> GridFunction:
    """Return ``T_y[u]``, the function ``x -> u(x - y)`` on the same grid.

    Shifts that are whole multiples of ``dx`` move samples exactly; other
    shifts blend the two neighbouring samples with nonnegative weights.
    """
    k = y / u.grid.dx
    K = round(k)
    idx = np.arange(u.grid.n)
    if abs(k - K) <= _SHIFT_ROUNDING * max(1.0, abs(k)):
        return u.with_values(u.sample_at_index(idx - int(K)))
    K0 = math.floor(k)
    frac = k - K0
    vals = frac * u.sample_at_index(idx - K0 - 1) + (1.0 - frac) * u.sample_at_index(idx - K0)
    return u.with_values(vals)


def weighted_sup_norm(u: GridFunction) -> float:
    """Truncated weighted norm sum_{n=1..N} 2^-n sup_{|x|<=n} |u(x)|.

    ``N = ceil(max(|x_min|, x_max))``; the neglected tail is at most
    ``2^-N sup|u|``.
    """
    g = u.grid
    if not g.contains(0.0):
        raise DomainError("weighted norm needs a grid containing x=0")
    n_max = math.ceil(max(abs(g.x_min), g.x_max))
    order = np.argsort(np.abs(g.x), kind="stable")
    dist = np.abs(g.x)[order]
    running = np.maximum.accumulate(np.abs(u.values)[order])
    total = 0.0
    for n in range(1, n_max + 1):
        count = int(np.searchsorted(dist, n + 1e-12 * n, side="right"))
        total += 2.0**-n * float(running[count - 1])
    return total


class Order(str, enum.Enum):
    EQUAL = "equal"
    LEQ = "leq"
    GEQ = "geq"
    INCOMPARABLE = "incomparable"


def compare(u: GridFunction, v: GridFunction) -> Order:
    """Exact pointwise order between two functions sampled on one grid."""
    if u.grid != v.grid:
        raise DomainError("cannot compare functions on different grids")
    diff = u.values - v.values
    le = bool(np.all(diff <= 0.0))
    ge = bool(np.all(diff >= 0.0))
    if le and ge:
        return Order.EQUAL
    if le:
        return Order.LEQ
    if ge:
        return Order.GEQ
    return Order.INCOMPARABLE

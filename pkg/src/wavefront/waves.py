"""Forced traveling waves, steady states and their independent oracles.

A wave of the nonlocal dispersal model with speed ``c`` is a fixed point of
``Q = L o K`` where

    K[phi](x) = [d (k * phi)(x) + mu f(x, phi(x + c tau))] / (d + mu)
    L[phi](x) = a int_x^inf exp(a (x - y)) phi(y) dy,   a = (d + mu) / c,

for ``c > 0`` (mirrored for ``c < 0``, identity for ``c = 0``).  Fixed points
are reached by iterating from the constant ``r*``, which produces a
pointwise nonincreasing sequence for any order-preserving map.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, PreconditionError, SolverError
from .gridfn import ZERO_LEFT, Grid, GridFunction, translate
from .kernels import Kernel, convolve, heat_apply
from .nonlinearity import Reaction

MONOTONE_SLACK = 1e-12
EDGE_FRACTION = 0.05


@dataclass(frozen=True)
class WaveParams:
    d: float
    mu: float
    kernel: Kernel
    f: Reaction
    tau: float = 0.0

    def __post_init__(self) -> None:
        if not (self.d > 0 and self.mu > 0 and self.tau >= 0):
            raise DomainError("need d > 0, mu > 0, tau >= 0")


def L_apply(phi: GridFunction, c: float, d: float, mu: float) -> GridFunction:
    """Exponential smoothing towards the direction of travel.

    ``phi`` is read as piecewise constant on cells ``[x_i, x_i + dx)``
    (``(x_i - dx, x_i]`` for ``c < 0``) and the integral is evaluated
    exactly, so constants and grid-aligned steps are reproduced without
    error and every weight is nonnegative.
    """
    if c == 0:
        return phi
    a = (d + mu) / abs(c)
    q = math.exp(-a * phi.grid.dx)
    b, den = [1.0 - q], [1.0, -q]
    if c > 0:
        rev = phi.values[::-1]
        out, _ = lfilter(b, den, rev, zi=[q * phi.right_value])
        return phi.with_values(out[::-1])
    out, _ = lfilter(b, den, phi.values, zi=[q * phi.left_value])
    return phi.with_values(out)


def K_apply(phi: GridFunction, c: float, p: WaveParams) -> GridFunction:
    spread = convolve(p.kernel, phi)
    ahead = phi if c * p.tau == 0 else translate(phi, -c * p.tau)
    birth = p.f(phi.x, ahead.values)
    return phi.with_values((p.d * spread.values + p.mu * birth) / (p.d + p.mu))


def nonlocal_wave_map(phi: GridFunction, c: float, p: WaveParams) -> GridFunction:
    return L_apply(K_apply(phi, c, p), c, p.d, p.mu)


def wave_map(c: float, p: WaveParams) -> Callable[[GridFunction], GridFunction]:
    return lambda phi: nonlocal_wave_map(phi, c, p)


# ---------------------------------------------------------------------------
# monotone iteration


def edge_limits(u: GridFunction, fraction: float = EDGE_FRACTION) -> tuple[float, float]:
    """Averages of the outer ``fraction`` of samples on each side."""
    k = max(1, int(round(fraction * u.grid.n)))
    return float(np.mean(u.values[:k])), float(np.mean(u.values[-k:]))


@dataclass(frozen=True)
class WaveProfile:
    profile: GridFunction
    speed: float
    residual: float
    iterations: int
    limits: tuple
    converged: bool
    monotone_iterates: bool
    last_step: float
    history: tuple = field(default=(), repr=False)

    def is_nondecreasing(self, slack: float = MONOTONE_SLACK) -> bool:
        return bool(np.all(np.diff(self.profile.values) >= -slack))

    def rows(self) -> list[list[float]]:
        return [[float(x), float(w)] for x, w in zip(self.profile.x, self.profile.values)]

    def meta(self) -> dict:
        return {
            "speed": self.speed,
            "residual": self.residual,
            "iterations": self.iterations,
            "limits": list(self.limits),
            "converged": self.converged,
            "monotone_iterates": self.monotone_iterates,
        }

    def meta_json(self) -> str:
        return json.dumps(self.meta(), indent=2, sort_keys=True)


def monotone_wave_iterate(
    map_: Callable[[GridFunction], GridFunction],
    r_star: float,
    tol: float = 1e-10,
    max_iter: int = 2000,
    *,
    grid: Grid | None = None,
    start: GridFunction | None = None,
    speed: float = 0.0,
    record_steps: bool = False,
) -> WaveProfile:
    """Iterate ``W_{k+1} = map(W_k)`` from ``W_0 = r*`` until the step is below ``tol``.

    Raises :class:`PreconditionError` if the first iterate exceeds ``r*``.
    Running out of iterations is reported through ``converged=False``.
    """
    if start is None:
        if grid is None:
            raise DomainError("need a grid or a start function")
        start = GridFunction.constant(grid, r_star)
    w = start
    nxt = map_(w)
    if np.any(nxt.values > w.values + MONOTONE_SLACK):
        i = int(np.argmax(nxt.values - w.values))
        raise PreconditionError(f"first iterate exceeds r* at x={w.x[i]!r}")
    monotone = True
    diffs = []
    k = 1
    step_size = float(np.max(np.abs(nxt.values - w.values)))
    diffs.append(step_size)
    while step_size >= tol and k < max_iter:
        w, nxt = nxt, map_(nxt)
        k += 1
        if np.any(nxt.values > w.values + MONOTONE_SLACK):
            monotone = False
        step_size = float(np.max(np.abs(nxt.values - w.values)))
        if record_steps:
            diffs.append(step_size)
    final = nxt
    residual = float(np.max(np.abs(map_(final).values - final.values)))
    return WaveProfile(
        profile=final,
        speed=speed,
        residual=residual,
        iterations=k,
        limits=edge_limits(final),
        converged=step_size < tol,
        monotone_iterates=monotone,
        last_step=step_size,
        history=tuple(diffs),
    )


@dataclass(frozen=True)
class ConnectionReport:
    left_limit: bool
    right_limit: bool
    monotone: bool
    limits: tuple

    @property
    def passed(self) -> bool:
        return self.left_limit and self.right_limit and self.monotone


def verify_connection(w: WaveProfile, r_star: float, tol_limits: float = 1e-3) -> ConnectionReport:
    left, right = w.limits
    return ConnectionReport(
        left_limit=abs(left) <= tol_limits,
        right_limit=abs(right - r_star) <= tol_limits,
        monotone=w.is_nondecreasing(),
        limits=(left, right),
    )


# ---------------------------------------------------------------------------
# Dirichlet steady state


@dataclass(frozen=True)
class SteadyParams:
    d: float
    mu: float
    f: Reaction


def _shoot(accel, slope: float, h: float, n: int, u_star: float):
    """RK4 for ``W'' = accel(W)`` from ``(0, slope)``.

    Stops as soon as the trajectory overshoots ``u*`` (returns +1) or turns
    back down (returns -1); 0 means neither happened within ``n`` steps.
    """
    w, v = 0.0, slope
    ws = [w]
    vs = [v]
    for _ in range(n):
        k1w, k1v = v, accel(w)
        k2w, k2v = v + 0.5 * h * k1v, accel(w + 0.5 * h * k1w)
        k3w, k3v = v + 0.5 * h * k2v, accel(w + 0.5 * h * k2w)
        k4w, k4v = v + h * k3v, accel(w + h * k3w)
        w += (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        ws.append(w)
        vs.append(v)
        if w > u_star:
            return 1, ws, vs
        if v < 0.0:
            return -1, ws, vs
    return 0, ws, vs


def dirichlet_steady_oracle(p: SteadyParams, L: float, tol: float = 1e-10, dx: float = 0.1) -> GridFunction:
    """Solve ``d W'' - mu W + mu f(W) = 0``, ``W(0) = 0``, ``W(L) ~ u*`` by shooting.

    The initial slope is bisected according to whether the RK4 trajectory
    (step ``dx/4``) overshoots ``u*`` or turns back down.  The separatrix is
    only followed while ``u* - W`` is large compared with the amplification
    of the slope error; from there on the linearised tail
    ``u* - (u* - W) exp(-lambda x)``, ``lambda^2 = mu (1 - f'(u*)) / d``,
    is used, which also makes ``W(L)`` match ``u*`` to well within ``tol``.
    """
    f = p.f
    u_star = f.u_star
    probe = np.linspace(0, 2 * u_star, 9)
    if not np.allclose(f(-7.0, probe), f(7.0, probe)):
        raise DomainError("oracle needs a habitat-independent reaction")
    mu_d = p.mu / p.d

    def accel(w: float) -> float:
        return mu_d * (w - float(f(0.0, w)))

    h = dx / 4.0
    n = int(round(L / h))
    grid = Grid.from_bounds(0.0, L, dx)
    lo, hi = 0.0, 10.0 * u_star * math.sqrt(mu_d)
    if _shoot(accel, hi, h, n, u_star)[0] != 1 or _shoot(accel, 1e-12 * hi, h, n, u_star)[0] == 1:
        raise SolverError("no bracketing initial slope in (0, 10 u* sqrt(mu/d))")
    best = None
    while hi - lo > 4e-16 * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        kind, ws, vs = _shoot(accel, mid, h, n, u_star)
        if kind == 1:
            hi = mid
        else:
            lo = mid
            best = (ws, vs)
    if best is None:
        best = _shoot(accel, lo, h, n, u_star)[1:]
    w = np.asarray(best[0])
    wp = np.asarray(best[1])
    gap = u_star - w
    trusted = (wp > 0) & (gap > max(tol, 1e-5 * u_star))
    bad = np.nonzero(~trusted[1:])[0]
    j = int(bad[0]) if bad.size else w.size - 1
    fp = float(f.derivative(0.0, u_star))
    if not fp < 1.0:
        raise SolverError("u* is not a stable rest state of the reaction")
    lam = math.sqrt(mu_d * (1.0 - fp))
    xs = h * np.arange(n + 1)
    full = np.empty(n + 1)
    m = min(j + 1, n + 1)
    full[:m] = w[:m]
    full[m:] = u_star - gap[m - 1] * np.exp(-lam * (xs[m:] - xs[m - 1]))
    vals = full[::4][: grid.n]
    vals[0] = 0.0
    if abs(vals[-1] - u_star) > max(tol, 1e-12):
        raise SolverError("shot does not reach u* at x = L; increase L")
    return GridFunction(grid, vals, ZERO_LEFT)


def steady_residual(w: GridFunction, p: SteadyParams, lo: float, hi: float) -> float:
    """Sup of ``|d W'' - mu W + mu f(W)|`` on ``[lo, hi]`` with a fourth-order stencil."""
    v = w.values
    dx = w.grid.dx
    d2 = np.full(v.size, np.nan)
    d2[2:-2] = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * dx * dx)
    res = p.d * d2 - p.mu * v + p.mu * p.f(0.0, v)
    mask = (w.x >= lo) & (w.x <= hi)
    return float(np.nanmax(np.abs(res[mask])))


def dirichlet_mild_oracle(p: SteadyParams, phi: GridFunction, T: float, dt: float) -> GridFunction:
    """Variation-of-constants iteration for the Dirichlet model without delay.

    Uses ``v(t + dt) = S(dt)[v] + mu int_0^dt S(s)[f(v)] ds`` with the
    trapezoid rule in ``s`` and the image heat kernel; independent of the
    finite-difference stepper.
    """
    v = phi
    n = int(math.ceil(T / dt - 1e-9))
    dt = T / n
    for _ in range(n):
        fv = v.with_values(p.f(0.0, v.values))
        fv = fv.with_values(np.where(v.x > 0, fv.values, 0.0))
        a = heat_apply("dirichlet_half_line", p.mu, p.d, dt, v)
        b = heat_apply("dirichlet_half_line", p.mu, p.d, dt, fv)
        v = v.with_values(a.values + 0.5 * dt * p.mu * (fv.values + b.values))
        v = v.with_values(np.where(v.x > 0, v.values, 0.0))
    return v

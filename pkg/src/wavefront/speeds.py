"""Spreading speeds: closed forms and the dispersion-relation infimum.

For the nonlocal dispersal model the one-sided speeds are

    c_pm*(c) = inf_{rho > 0} log(l_pm(c, rho)) / rho,
    l(c, rho) = [d khat(rho) + mu f'(0) exp(-rho c tau)] / (c rho + d + mu),

with ``l_pm(c, rho) = l(c, pm rho)`` where ``d + mu pm c rho > 0`` and
``+inf`` elsewhere.  The minimal wave speed is the root of ``c_+*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError, RangeError
from .kernels import Kernel, khat, max_finite_rho

RHO_MIN = 1e-3
N_SCAN = 400
REL_TOL = 1e-8
C_TOL = 1e-6
C_LIMIT = 1e3
_EXP_LIMIT = 700.0


class LocalSpeed(NamedTuple):
    value: float
    degenerate: bool


def kpp_local_speed(d: float, mu: float, fprime0: float) -> LocalSpeed:
    """``2 sqrt(mu d (f'(0) - 1))``; zero and flagged degenerate when ``f'(0) <= 1``."""
    if not (d > 0 and mu > 0):
        raise DomainError("d and mu must be positive")
    if fprime0 <= 1.0:
        return LocalSpeed(0.0, True)
    return LocalSpeed(2.0 * math.sqrt(mu * d * (fprime0 - 1.0)), False)


def kpp_rd_speed(d: float, hprime0: float) -> float:
    """``2 sqrt(d h'(0))`` for ``u_t = d u_xx + h(u)``."""
    if not d > 0:
        raise DomainError("d must be positive")
    if not hprime0 > 0:
        raise DomainError("h'(0) must be positive")
    return 2.0 * math.sqrt(d * hprime0)


@dataclass(frozen=True)
class DispersionParams:
    d: float
    mu: float
    tau: float
    fprime0: float
    kernel: Kernel

    def __post_init__(self) -> None:
        if not (self.d > 0 and self.mu > 0 and self.tau >= 0):
            raise DomainError("need d > 0, mu > 0, tau >= 0")
        if not self.fprime0 > 1.0:
            raise DomainError("f'(0) must exceed 1")
        if self.kernel.is_dirac:
            raise DomainError("the dispersal term vanishes for the Dirac kernel; use kpp_local_speed")


def _sgn(sign: str) -> float:
    if sign == "plus":
        return 1.0
    if sign == "minus":
        return -1.0
    raise DomainError("sign must be 'plus' or 'minus'")


def dispersion_value(p: DispersionParams, c: float, rho: float, sign: str = "plus") -> float:
    """``l_pm(c, rho)``; ``math.inf`` outside the admissible set."""
    s = _sgn(sign)
    denom = p.d + p.mu + s * c * rho
    if not rho > 0 or denom <= 0:
        return math.inf
    r = s * rho
    expo = -r * c * p.tau
    if expo > _EXP_LIMIT:
        raise RangeError(f"exp(-rho c tau) overflows at rho={rho}")
    return (p.d * khat(p.kernel, r) + p.mu * p.fprime0 * math.exp(expo)) / denom


def _rho_max(p: DispersionParams, c: float, sign: str) -> float:
    s = _sgn(sign)
    bound = max_finite_rho(p.kernel)
    if s * c < 0:
        bound = min(bound, (p.d + p.mu) / abs(c))
    if c * s < 0 and p.tau > 0:
        bound = min(bound, _EXP_LIMIT / (abs(c) * p.tau))
    return bound * (1.0 - 1e-9)


def _objective(p: DispersionParams, c: float, sign: str):
    def g(rho: float) -> float:
        val = dispersion_value(p, c, rho, sign)
        return math.inf if not math.isfinite(val) else math.log(val) / rho

    return g


def dispersion_speed(p: DispersionParams, c: float, sign: str = "plus") -> tuple[float, float]:
    """``(c_pm*(c), argmin rho)`` by a log-spaced scan refined with golden section."""
    rho_max = _rho_max(p, c, sign)
    if not rho_max > RHO_MIN:
        raise RangeError(f"no admissible rho above {RHO_MIN} at c={c}")
    g = _objective(p, c, sign)
    rhos = np.geomspace(RHO_MIN, rho_max, N_SCAN)
    vals = np.array([g(r) for r in rhos])
    if not np.any(np.isfinite(vals)):
        raise RangeError(f"dispersion relation is infinite on the whole scan at c={c}")
    i = int(np.argmin(vals))
    best_rho, best = float(rhos[i]), float(vals[i])
    if 0 < i < N_SCAN - 1:
        a, b, cc = float(rhos[i - 1]), float(rhos[i]), float(rhos[i + 1])
        rho_ref = optimize.golden(g, brack=(a, b, cc), tol=REL_TOL)
        val_ref = g(rho_ref)
        if val_ref <= best:
            best_rho, best = float(rho_ref), float(val_ref)
    return best, best_rho


def brute_force_speed(p: DispersionParams, c: float, sign: str = "plus", n: int = 100_000) -> float:
    """Dense linear scan, used as an independent check of :func:`dispersion_speed`."""
    rho_max = _rho_max(p, c, sign)
    g = _objective(p, c, sign)
    return float(min(g(r) for r in np.linspace(RHO_MIN, rho_max, n)))


def _root_of_decreasing(fn, tol: float) -> float:
    """``inf {c : fn(c) <= 0}`` for nonincreasing ``fn`` by doubling then bisection."""
    if fn(0.0) > 0:
        lo, hi = 0.0, 1.0
        while fn(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > C_LIMIT:
                raise RangeError("no sign change found for |c| <= 1e3")
    else:
        lo, hi = -1.0, 0.0
        while fn(lo) <= 0:
            lo, hi = 2.0 * lo, lo
            if lo < -C_LIMIT:
                raise RangeError("no sign change found for |c| <= 1e3")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class MinSpeed(NamedTuple):
    c_star: float
    c_star_dual: float
    discrepancy: float


def min_wave_speed(p: DispersionParams, tol: float = C_TOL) -> MinSpeed:
    """``c* = inf{c : c_+*(c) <= 0}`` together with ``-sup{c : c_-*(c) <= 0}``."""
    primal = _root_of_decreasing(lambda c: dispersion_speed(p, c, "plus")[0], tol)
    # c_-* is nondecreasing, so sup{c : c_-*(c) <= 0} = -inf{c : c_-*(-c) <= 0}
    dual = _root_of_decreasing(lambda c: dispersion_speed(p, -c, "minus")[0], tol)
    return MinSpeed(primal, dual, abs(primal - dual))


@dataclass(frozen=True)
class SpeedReport:
    cs: tuple
    c_plus_star: tuple
    c_minus_star: tuple
    c_star: float
    argmin_rho: float
    c_star_dual: float | None = None

    def c_plus(self, c: float) -> float:
        return self.c_plus_star[self.cs.index(c)]

    def c_minus(self, c: float) -> float:
        return self.c_minus_star[self.cs.index(c)]

    def rows(self) -> list[list[float]]:
        return [[c, p, m] for c, p, m in zip(self.cs, self.c_plus_star, self.c_minus_star)]


def speed_report(p: DispersionParams, cs: Sequence[float]) -> SpeedReport:
    cs = tuple(float(c) for c in cs)
    plus = tuple(dispersion_speed(p, c, "plus")[0] for c in cs)
    minus = tuple(dispersion_speed(p, c, "minus")[0] for c in cs)
    ms = min_wave_speed(p)
    _, rho = dispersion_speed(p, ms.c_star, "plus")
    return SpeedReport(cs, plus, minus, ms.c_star, rho, ms.c_star_dual)

"""Reaction terms, the KPP property, and explicit minorants.

Two families of nonlinearities appear in the models:

* :class:`Reaction` ``f(s, u)`` -- a birth function that is nondecreasing in
  both the habitat coordinate ``s`` and the density ``u``, with limits
  ``f_-inf`` / ``f_+inf`` as ``s -> -+inf``.  Used by the delayed
  reaction-diffusion, nonlocal dispersal and Dirichlet models.
* :class:`KppReaction` ``h(x, u)`` -- a net growth rate that is
  asymptotically homogeneous with KPP limits on both sides.

The structural hypotheses are universally quantified, so they are checked on
sample grids only; a check can falsify a hypothesis but never prove it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import ConstructionError, DomainError, EvaluationError
from .gridfn import ZERO, Grid, GridFunction

N_SAMPLES = 200
S_PROBE = 50.0
FD_REL_STEP = 1e-6
ORDER_SLACK = 1e-12


def central_difference(fn: Callable, u: float, scale: float = 1.0) -> float:
    h = FD_REL_STEP * scale
    return float((fn(u + h) - fn(u - h)) / (2.0 * h))


# ---------------------------------------------------------------------------
# habitat profiles


@dataclass(frozen=True)
class ShiftProfile:
    """A habitat quality ``r(s)`` with its limits at -+infinity."""

    r: Callable[[np.ndarray], np.ndarray]
    r_minus_inf: float
    r_plus_inf: float
    label: str = "custom"

    def __call__(self, s):
        return self.r(np.asarray(s, dtype=float))

    @classmethod
    def constant(cls, value: float) -> ShiftProfile:
        v = float(value)
        return cls(lambda s: np.full(np.shape(s), v), v, v, f"constant({v})")

    @classmethod
    def smoothstep(cls, left: float, right: float, width: float = 10.0) -> ShiftProfile:
        """C^1 cubic ramp from ``left`` to ``right`` on ``|s| <= width``, flat outside."""
        if width <= 0:
            raise DomainError("smoothstep width must be positive")
        a, b, w = float(left), float(right), float(width)

        def r(s):
            t = np.clip((np.asarray(s, dtype=float) + w) / (2.0 * w), 0.0, 1.0)
            return a + (b - a) * t * t * (3.0 - 2.0 * t)

        return cls(r, a, b, f"smoothstep({a}, {b}, {w})")

    @classmethod
    def tabulated(cls, s_points, r_points) -> ShiftProfile:
        sp = np.asarray(s_points, dtype=float)
        rp = np.asarray(r_points, dtype=float)
        if sp.ndim != 1 or sp.shape != rp.shape or sp.size < 2 or np.any(np.diff(sp) <= 0):
            raise DomainError("tabulated profile needs increasing s samples matching r samples")
        return cls(lambda s: np.interp(s, sp, rp), float(rp[0]), float(rp[-1]), "tabulated")

    def check(self, n_samples: int = N_SAMPLES, s_probe: float = S_PROBE) -> list[str]:
        s = np.linspace(-s_probe, s_probe, n_samples)
        rs = self(s)
        problems = []
        if np.any(np.diff(rs) < -ORDER_SLACK):
            problems.append("r is not nondecreasing")
        if abs(float(self(-s_probe)) - self.r_minus_inf) > 1e-8:
            problems.append("r(-S) differs from r_minus_inf")
        if abs(float(self(s_probe)) - self.r_plus_inf) > 1e-8:
            problems.append("r(+S) differs from r_plus_inf")
        return problems


# ---------------------------------------------------------------------------
# KPP property


def kpp_check(F: Callable, u_star: float, u_max: float, n_samples: int = N_SAMPLES) -> list[str]:
    """Sample the three KPP clauses for ``F`` with positive root ``u_star``.

    Returns the labels of the violated clauses (``"i"``, ``"ii"``, ``"iii"``);
    an empty list means no violation was found on the samples.
    """
    if u_star <= 0 or u_max <= u_star or n_samples < 10:
        raise DomainError("kpp_check needs u_star > 0, u_max > u_star and n_samples >= 10")
    u = np.linspace(0.0, u_max, n_samples)
    Fu = np.asarray(F(u), dtype=float) * np.ones_like(u)
    F0 = float(F(0.0))
    Fs = float(F(u_star))
    slope0 = central_difference(F, 0.0, u_star)
    if not (np.all(np.isfinite(Fu)) and math.isfinite(F0) and math.isfinite(Fs) and math.isfinite(slope0)):
        raise EvaluationError("F returned non-finite values")
    tol = 1e-10 * max(1.0, float(np.max(np.abs(Fu))))
    violated = []
    if abs(F0) > tol or abs(Fs) > tol or not slope0 > 0:
        violated.append("i")
    keep = (u > 0) & (np.abs(u - u_star) > 1e-12 * u_star)
    uu, FF = u[keep], Fu[keep]
    if np.any(FF * (uu - u_star) >= 0):
        violated.append("ii")
    if np.any(FF >= slope0 * uu):
        violated.append("iii")
    return violated


# ---------------------------------------------------------------------------
# birth functions f(s, u)


@dataclass(frozen=True)
class Reaction:
    f: Callable[[Any, Any], np.ndarray]
    f_minus_inf: Callable[[Any], np.ndarray]
    f_plus_inf: Callable[[Any], np.ndarray]
    u_star: float
    fprime0: float
    lip: float
    df_du: Callable[[Any, Any], np.ndarray] | None = None
    s_independent: bool = False
    label: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, s, u):
        return self.f(s, u)

    def derivative(self, s, u):
        if self.df_du is not None:
            return self.df_du(s, u)
        h = FD_REL_STEP * max(1.0, self.u_star)
        return (self.f(s, np.asarray(u) + h) - self.f(s, np.asarray(u) - h)) / (2.0 * h)

    def check_invariants(
        self, n_samples: int = N_SAMPLES, s_probe: float = S_PROBE, u_max: float | None = None
    ) -> list[str]:
        """Sampled (B3)-(B5).  Returns human-readable violations, empty if none."""
        u_max = 2.0 * self.u_star if u_max is None else u_max
        s = np.linspace(-s_probe, s_probe, n_samples)
        u = np.linspace(0.0, u_max, n_samples)
        F = np.asarray(self.f(s[:, None], u[None, :]), dtype=float)
        if not np.all(np.isfinite(F)):
            raise EvaluationError("reaction returned non-finite values")
        problems = []
        fm = np.asarray(self.f_minus_inf(u), dtype=float)
        fp = np.asarray(self.f_plus_inf(u), dtype=float)
        if (
            np.any(np.diff(F, axis=0) < -ORDER_SLACK)
            or np.any(np.diff(F, axis=1) < -ORDER_SLACK)
            or np.any(F < fm[None, :] - ORDER_SLACK)
            or np.any(F > fp[None, :] + ORDER_SLACK)
        ):
            problems.append("B3")
        pos = u[1:]
        if abs(float(self.f_minus_inf(0.0))) > ORDER_SLACK or np.any(fm[1:] >= pos):
            problems.append("B5")
        clauses = kpp_check(lambda v: self.f_plus_inf(v) - v, self.u_star, max(u_max, 1.5 * self.u_star))
        if clauses:
            problems.append("B4(" + ",".join(clauses) + ")")
        return problems


def shifted_logistic(profile: ShiftProfile, mu: float) -> Reaction:
    """Birth function with ``mu*f(s,u) - mu*u = u(r(s) - u)`` below its peak.

    Capped at the peak value ``(mu + r)^2 / (4 mu)`` beyond
    ``u = (mu + r)/2`` so that ``f(s, .)`` stays nondecreasing.
    """
    mu = float(mu)
    if mu <= 0:
        raise DomainError("mu must be positive")
    s_grid = np.linspace(-S_PROBE, S_PROBE, N_SAMPLES)
    r_lo = min(profile.r_minus_inf, profile.r_plus_inf, float(np.min(profile(s_grid))))
    r_hi = max(profile.r_minus_inf, profile.r_plus_inf, float(np.max(profile(s_grid))))
    if mu + r_lo < 0:
        raise DomainError(f"shifted logistic needs mu >= -min r (mu={mu}, min r={r_lo})")

    def make(rfun):
        def f(s, u):
            r = rfun(s)
            u = np.asarray(u, dtype=float)
            peak = 0.5 * (mu + r)
            return np.where(u <= peak, u + u * (r - u) / mu, (mu + r) ** 2 / (4.0 * mu))

        return f

    def df_du(s, u):
        r = profile(s)
        u = np.asarray(u, dtype=float)
        return np.where(u <= 0.5 * (mu + r), 1.0 + (r - 2.0 * u) / mu, 0.0)

    rp, rm = profile.r_plus_inf, profile.r_minus_inf
    f_plus = make(lambda s: np.full(np.shape(s), rp))
    f_minus = make(lambda s: np.full(np.shape(s), rm))
    u_star = rp if rp <= mu else (mu + rp) ** 2 / (4.0 * mu)
    return Reaction(
        f=make(profile),
        f_minus_inf=lambda u: f_minus(0.0, u),
        f_plus_inf=lambda u: f_plus(0.0, u),
        u_star=float(u_star),
        fprime0=1.0 + rp / mu,
        lip=1.0 + max(r_hi, 0.0) / mu,
        df_du=df_du,
        s_independent=(profile.r_minus_inf == profile.r_plus_inf and r_lo == r_hi),
        label=f"shifted-logistic({profile.label}, mu={mu})",
        meta={"profile": profile, "mu": mu},
    )


def tabulated_reaction(u_points, f_points) -> Reaction:
    """Habitat-independent ``f(u)`` by linear interpolation, constant past the last sample."""
    up = np.asarray(u_points, dtype=float)
    fp = np.asarray(f_points, dtype=float)
    if up.ndim != 1 or up.shape != fp.shape or up.size < 3 or up[0] != 0.0 or np.any(np.diff(up) <= 0):
        raise DomainError("tabulated reaction needs increasing u samples starting at 0")
    g = fp - up
    crossing = np.nonzero((g[:-1] > 0) & (g[1:] <= 0))[0]
    if crossing.size == 0:
        raise DomainError("tabulated reaction has no positive fixed point f(u)=u")
    i = int(crossing[0])
    u_star = up[i] + (up[i + 1] - up[i]) * g[i] / (g[i] - g[i + 1])
    slopes = np.diff(fp) / np.diff(up)

    def f1(u):
        return np.interp(u, up, fp)

    return Reaction(
        f=lambda s, u: f1(np.asarray(u, dtype=float)) * np.ones(np.broadcast(np.asarray(s), np.asarray(u)).shape),
        f_minus_inf=f1,
        f_plus_inf=f1,
        u_star=float(u_star),
        fprime0=float(slopes[0]),
        lip=float(np.max(np.abs(slopes))),
        s_independent=True,
        label="tabulated",
        meta={"u": up, "f": fp},
    )


# ---------------------------------------------------------------------------
# net growth rates h(x, u)


@dataclass(frozen=True)
class KppReaction:
    h: Callable[[Any, Any], np.ndarray]
    h_minus_inf: Callable[[Any], np.ndarray]
    h_plus_inf: Callable[[Any], np.ndarray]
    u_minus_star: float
    u_plus_star: float
    M_star: float
    hprime_minus: float
    hprime_plus: float
    dh_du: Callable[[Any, Any], np.ndarray] | None = None
    label: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, x, u):
        return self.h(x, u)

    def derivative(self, x, u):
        if self.dh_du is not None:
            return self.dh_du(x, u)
        step = FD_REL_STEP * max(1.0, self.M_star)
        return (self.h(x, np.asarray(u) + step) - self.h(x, np.asarray(u) - step)) / (2.0 * step)

    def check_invariants(self, n_samples: int = N_SAMPLES, s_probe: float = S_PROBE) -> list[str]:
        s = np.linspace(-s_probe, s_probe, n_samples)
        problems = []
        if np.any(np.abs(np.asarray(self.h(s, 0.0))) > ORDER_SLACK):
            problems.append("D1")
        u_hi = np.linspace(self.M_star, 3.0 * self.M_star, n_samples)
        if np.any(np.asarray(self.h(s[:, None], u_hi[None, :])) > ORDER_SLACK):
            problems.append("D2")
        for name, fn, root in (
            ("minus", self.h_minus_inf, self.u_minus_star),
            ("plus", self.h_plus_inf, self.u_plus_star),
        ):
            clauses = kpp_check(fn, root, 2.0 * max(root, self.M_star))
            if clauses:
                problems.append(f"D3-{name}(" + ",".join(clauses) + ")")
        return problems


def heterogeneous_logistic(profile: ShiftProfile) -> KppReaction:
    """``h(x, u) = u (r(x) - u)``; limits are KPP when ``r(+-inf) > 0``."""
    s_grid = np.linspace(-S_PROBE, S_PROBE, N_SAMPLES)
    r_hi = max(profile.r_minus_inf, profile.r_plus_inf, float(np.max(profile(s_grid))))
    rm, rp = profile.r_minus_inf, profile.r_plus_inf
    return KppReaction(
        h=lambda x, u: np.asarray(u, dtype=float) * (profile(x) - np.asarray(u, dtype=float)),
        h_minus_inf=lambda u: np.asarray(u, dtype=float) * (rm - np.asarray(u, dtype=float)),
        h_plus_inf=lambda u: np.asarray(u, dtype=float) * (rp - np.asarray(u, dtype=float)),
        u_minus_star=rm,
        u_plus_star=rp,
        M_star=max(r_hi, 0.0),
        hprime_minus=rm,
        hprime_plus=rp,
        dh_du=lambda x, u: profile(x) - 2.0 * np.asarray(u, dtype=float),
        label=f"logistic({profile.label})",
        meta={"profile": profile},
    )


# ---------------------------------------------------------------------------
# explicit minorants


def _quadratic_peak(u, r, K):
    """``u + K u (r - u)`` up to its peak at ``(1 + K r)/(2K)``, flat afterwards."""
    peak = (1.0 + K * r) / (2.0 * K)
    v = np.minimum(u, peak)
    return v + K * v * (r - v)


def _zero_slope(fn_of_u, scale: float) -> float:
    h = FD_REL_STEP * scale
    return float((fn_of_u(h) - fn_of_u(0.0)) / h)


def lemma61_minorant(
    f: Reaction,
    gamma: float,
    u_double_star: float,
    *,
    K: float | None = None,
    n_samples: int = N_SAMPLES,
    s_probe: float = S_PROBE,
) -> Reaction:
    """Build a logistic-type minorant ``f_{gamma,u**} <= f`` on ``[0, u**]``.

    The minorant is ``u + K u (r(s) - u)`` capped at its peak, with a
    continuous nondecreasing ``r`` whose right limit is
    ``(f'(0) - 1 - gamma) / K``.  ``K`` is taken as the largest feasible value
    in ``{Lip(f) 2^-k}`` unless given.  ``r`` is the largest nondecreasing
    function that keeps the inequality on the ``(s, u)`` samples, delayed by
    one s-step so that monotonicity of ``f`` in ``s`` covers the gaps.
    """
    if not 0.0 < gamma < f.fprime0 - 1.0:
        raise DomainError(f"gamma must lie in (0, f'(0)-1) = (0, {f.fprime0 - 1.0})")
    if u_double_star < f.u_star:
        raise DomainError("u** must be at least u*")
    s = np.linspace(-s_probe, s_probe, n_samples)
    ds = s[1] - s[0]
    u = np.linspace(0.0, u_double_star, n_samples)[1:]
    F = np.asarray(f.f(s[:, None], u[None, :]), dtype=float)
    scale = max(1.0, f.u_star)
    slope0 = np.array([_zero_slope(lambda v, si=si: f.f(si, v), scale) for si in s])
    candidates = [K] if K is not None else [f.lip * 2.0**-k for k in range(41)]

    witness = (None, None)
    for KK in candidates:
        r_inf = (f.fprime0 - 1.0 - gamma) / KK

        def feasible(r):
            g = _quadratic_peak(u[None, :], r[:, None], KK)
            return np.all(g <= F, axis=1)

        lo = np.full(s.size, -1.0 / KK)
        hi = np.minimum(np.full(s.size, r_inf), (slope0 - 1.0) / KK)
        ok_hi = feasible(hi)
        lo_probe = lo + 1e-12 / KK
        if not np.all(feasible(lo_probe) | ok_hi):
            bad = int(np.argmin(feasible(lo_probe)))
            g = _quadratic_peak(u, lo_probe[bad], KK)
            witness = (float(s[bad]), float(u[int(np.argmax(g - F[bad]))]))
            continue
        lo = np.where(ok_hi, hi, lo_probe)
        hi_b = hi.copy()
        for _ in range(80):
            mid = 0.5 * (lo + hi_b)
            ok = feasible(mid)
            lo = np.where(ok_hi, lo, np.where(ok, mid, lo))
            hi_b = np.where(ok_hi, hi_b, np.where(ok, hi_b, mid))
        r_max = np.where(ok_hi, hi, lo)
        r_vals = np.minimum.accumulate(r_max[::-1])[::-1]
        r_vals[0] = min(r_vals[0], 0.0)
        if not (ok_hi[-1] and abs(r_vals[-1] - r_inf) <= 1e-14 * max(1.0, abs(r_inf))):
            witness = (float(s[-1]), None)
            continue
        if r_vals[0] <= -1.0 / KK:
            witness = (float(s[0]), None)
            continue
        return _lemma61_reaction(f, gamma, u_double_star, KK, s + ds, r_vals, r_inf)
    raise ConstructionError("no admissible (r, K) on the sample set", *witness)


def _lemma61_reaction(f, gamma, u_double_star, K, s_nodes, r_vals, r_inf) -> Reaction:
    s_nodes = s_nodes.copy()
    r_vals = r_vals.copy()
    r_left = float(r_vals[0])

    def r(s):
        return np.interp(np.asarray(s, dtype=float), s_nodes, r_vals, left=r_left, right=r_inf)

    def f_l(s, u):
        return _quadratic_peak(np.asarray(u, dtype=float), r(s), K)

    def df_du(s, u):
        rs = r(s)
        u = np.asarray(u, dtype=float)
        return np.where(u <= (1.0 + K * rs) / (2.0 * K), 1.0 + K * rs - 2.0 * K * u, 0.0)

    u_star = r_inf if K * r_inf <= 1.0 else (1.0 + K * r_inf) ** 2 / (4.0 * K)
    return Reaction(
        f=f_l,
        f_minus_inf=lambda u: _quadratic_peak(np.asarray(u, dtype=float), r_left, K),
        f_plus_inf=lambda u: _quadratic_peak(np.asarray(u, dtype=float), r_inf, K),
        u_star=float(u_star),
        fprime0=1.0 + K * r_inf,
        lip=1.0 + K * max(r_inf, 0.0),
        df_du=df_du,
        s_independent=False,
        label=f"lemma61-minorant(gamma={gamma})",
        meta={
            "K": K,
            "r": r,
            "r_minus_inf": r_left,
            "r_plus_inf": r_inf,
            "gamma": gamma,
            "u_double_star": u_double_star,
            "source": f,
        },
    )


@dataclass(frozen=True)
class QuadraticMinorant:
    """The pair ``R_+(s,u) = K_+ (r^+(s) u - u^2)`` and ``R_-`` bounding ``h`` from below."""

    K_plus: float
    K_minus: float
    kstar: float
    r_plus: Callable
    r_minus: Callable
    gamma: float
    M: float

    def R_plus(self, s, u):
        u = np.asarray(u, dtype=float)
        return self.K_plus * (self.r_plus(s) * u - u * u)

    def R_minus(self, s, u):
        u = np.asarray(u, dtype=float)
        return self.K_minus * (self.r_minus(s) * u - u * u)

    def gap(self, h: KppReaction, s, u):
        """``h(s,u) - max(R_+(s,u), R_-(-s,u))``; nonnegative where the bound holds."""
        s = np.asarray(s, dtype=float)
        return np.asarray(h(s, u)) - np.maximum(self.R_plus(s, u), self.R_minus(-s, u))


def quadratic_minorant(
    h: KppReaction,
    gamma: float,
    M: float,
    *,
    K_plus: float | None = None,
    K_minus: float | None = None,
    n_samples: int = N_SAMPLES,
    s_probe: float = S_PROBE,
) -> QuadraticMinorant:
    """Quadratic lower bounds for an asymptotically homogeneous KPP rate.

    ``k*`` is the smallest sampled ``K r`` over both sides (and at most 0),
    which can be more conservative than necessary.
    """
    if not 0.0 < gamma < min(h.hprime_minus, h.hprime_plus):
        raise DomainError("gamma must lie in (0, min h'_{+-}(0))")
    if M < h.M_star:
        raise DomainError("M must be at least M*")
    u = np.linspace(0.0, M, n_samples)[1:]
    s_pos = np.linspace(0.0, s_probe, n_samples)
    lip_grid = np.abs(
        np.asarray(h.derivative(np.linspace(-s_probe, s_probe, n_samples)[:, None], np.linspace(0, M, n_samples)[None, :]))
    )
    lip = float(np.max(lip_grid))

    def side(sign: float, hprime0: float, K_given):
        H = np.asarray(h(sign * s_pos[:, None], u[None, :]), dtype=float)
        slope0 = np.array([_zero_slope(lambda v, si=si: h(sign * si, v), max(1.0, M)) for si in s_pos])
        candidates = [K_given] if K_given is not None else [lip * 2.0**-k for k in range(41)]
        last = (None, None)
        for KK in candidates:
            r_inf = (hprime0 - gamma) / KK
            r_max = np.minimum(np.min(H / (KK * u[None, :]) + u[None, :], axis=1), slope0 / KK)
            if r_max[-1] < r_inf:
                i = int(np.argmin(H[-1] / (KK * u) + u))
                last = (float(sign * s_pos[-1]), float(u[i]))
                continue
            r_vals = np.minimum.accumulate(np.minimum(r_max, r_inf)[::-1])[::-1]
            return KK, r_inf, r_vals, float(min(0.0, KK * np.min(r_vals)))
        raise ConstructionError("minorant inequality violated on samples", *last)

    Kp, rinf_p, rv_p, ks_p = side(1.0, h.hprime_plus, K_plus)
    Km, rinf_m, rv_m, ks_m = side(-1.0, h.hprime_minus, K_minus)
    kstar = min(ks_p, ks_m)

    def build(KK, r_inf, r_vals):
        vals = r_vals.copy()
        vals[0] = kstar / KK
        vals = np.maximum.accumulate(vals)
        nodes = s_pos.copy()

        def r(s):
            return np.interp(np.asarray(s, dtype=float), nodes, vals, left=kstar / KK, right=r_inf)

        return r

    return QuadraticMinorant(
        K_plus=Kp,
        K_minus=Km,
        kstar=kstar,
        r_plus=build(Kp, rinf_p, rv_p),
        r_minus=build(Km, rinf_m, rv_m),
        gamma=gamma,
        M=M,
    )


# ---------------------------------------------------------------------------
# bump fixtures


def bump_fixture(kind: str, d: float, grid: Grid) -> GridFunction:
    """Trapezoid test functions: ``h`` (plateau [-1,1], support [-2,2]) or ``xi_d``."""
    if kind == "h":
        width = 1.0
    elif kind == "xi_d":
        if d <= 0:
            raise DomainError("xi_d needs d > 0")
        width = float(d)
    else:
        raise DomainError(f"unknown bump kind {kind!r}")
    vals = np.clip(width + 1.0 - np.abs(grid.x), 0.0, 1.0)
    return GridFunction(grid, vals, ZERO)

"""Sampled falsification checks for the structural hypotheses of monotone maps.

Each check applies an operator to seeded random inputs and records the
largest violation of an order relation.  A check can only find
counterexamples; a clean report is evidence, not proof.  Asymptotic
properties are examined over a finite number of iterations and labelled
``"finite-horizon proxy"``.

A violation counts when it exceeds ``SLACK``; ``max_violation`` is reported
net of that slack, so it is nonpositive exactly when no witness was found.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .evolve import ModelSpec, moving_frame_map, step, State, LimitFamily
from .gridfn import EDGE, Grid, GridFunction, translate
from .nonlinearity import Reaction, bump_fixture, lemma61_minorant

SLACK = 1e-10
MAX_WITNESSES = 5
PROXY = "finite-horizon proxy"

Operator = Callable[[GridFunction], GridFunction]


class Lcg64:
    """``x <- 6364136223846793005 x + 1442695040888963407 (mod 2^64)``."""

    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = int(seed) & self.MASK

    def next_u64(self) -> int:
        self.state = (self.A * self.state + self.C) & self.MASK
        return self.state

    def uniform(self) -> float:
        """A double in ``[0, 1)`` from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(n)])


def random_monotone(rng: Lcg64, grid: Grid, amplitude: float) -> GridFunction:
    """Nondecreasing function from 0 up to at most ``amplitude``.

    Increments are ``U^8`` so that profiles mix long flats with sharp rises.
    """
    inc = rng.uniforms(grid.n) ** 8
    total = inc.sum()
    height = amplitude * rng.uniform()
    vals = np.cumsum(inc) * (height / total) if total > 0 else np.zeros(grid.n)
    return GridFunction(grid, np.minimum(vals, amplitude), EDGE)


def random_pair(rng: Lcg64, grid: Grid, r_star: float) -> tuple[GridFunction, GridFunction]:
    """Ordered pair ``phi <= psi <= r*`` of nondecreasing functions."""
    phi = random_monotone(rng, grid, r_star)
    gap = random_monotone(rng, grid, r_star - float(phi.values.max()))
    return phi, phi.with_values(phi.values + gap.values)


@dataclass(frozen=True)
class OperatorUnderTest:
    op: Operator
    r_star: float
    label: str
    margin: float = 0.0

    def __call__(self, phi: GridFunction) -> GridFunction:
        return self.op(phi)


@dataclass(frozen=True)
class Witness:
    sample: int
    x: float | None
    violation: float
    params: dict = field(default_factory=dict)
    inputs: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"sample": self.sample, "x": self.x, "violation": self.violation, "params": self.params}


@dataclass
class CheckReport:
    name: str
    samples_tested: int = 0
    max_violation: float = -SLACK
    witnesses: list = field(default_factory=list)
    label: str = "sampled"
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def record(self, sample: int, diff: np.ndarray, xs: np.ndarray, params: dict, inputs: tuple) -> None:
        """Fold one pointwise ``lhs - rhs`` array (violation where positive) into the report."""
        self.samples_tested += 1
        if diff.size == 0:
            return
        i = int(np.argmax(diff))
        worst = float(diff[i]) - SLACK
        self.max_violation = max(self.max_violation, worst)
        if worst > 0 and len(self.witnesses) < MAX_WITNESSES:
            self.witnesses.append(Witness(sample, float(xs[i]), float(diff[i]), params, inputs))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "label": self.label,
            "samples_tested": self.samples_tested,
            "max_violation": self.max_violation,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _window(u: GridFunction, lo_margin: float, hi_margin: float) -> np.ndarray:
    return (u.x >= u.grid.x_min + lo_margin) & (u.x <= u.grid.x_max - hi_margin)


# ---------------------------------------------------------------------------
# order hypotheses


def _a1_diff(o: OperatorUnderTest, phi: GridFunction, y: float):
    lhs = o(translate(phi, -y))
    rhs = translate(o(phi), -y)
    mask = _window(phi, o.margin, o.margin + y)
    return (lhs.values - rhs.values)[mask], phi.x[mask]


def check_translation_comparison(
    o: OperatorUnderTest, phis: Sequence[GridFunction], ys: Sequence[float]
) -> CheckReport:
    """``Q o T_{-y}[phi] <= T_{-y} o Q[phi]`` for ``y >= 0``, on the interior window."""
    rep = CheckReport("A1")
    for y in ys:
        if y < 0:
            raise DomainError("shifts must be nonnegative")
    k = 0
    for phi in phis:
        for y in ys:
            diff, xs = _a1_diff(o, phi, y)
            rep.record(k, diff, xs, {"y": float(y)}, (phi,))
            k += 1
    return rep


def check_monotone(o: OperatorUnderTest, pairs: Sequence[tuple]) -> CheckReport:
    """``phi <= psi  =>  Q[phi] <= Q[psi]``."""
    rep = CheckReport("A2")
    for k, (phi, psi) in enumerate(pairs):
        if np.any(phi.values > psi.values):
            raise DomainError("pairs must be ordered")
        diff = o(phi).values - o(psi).values
        mask = _window(phi, o.margin, o.margin)
        rep.record(k, diff[mask], phi.x[mask], {}, (phi, psi))
    return rep


def check_subhomogeneous(
    o: OperatorUnderTest, phis: Sequence[GridFunction], kappas: Sequence[float]
) -> CheckReport:
    """``Q[kappa phi] >= kappa Q[phi]`` for ``kappa`` in ``[0, 1]``."""
    rep = CheckReport("subhomogeneity")
    k = 0
    for phi in phis:
        q_phi = o(phi).values
        mask = _window(phi, o.margin, o.margin)
        for kappa in kappas:
            if not 0.0 <= kappa <= 1.0:
                raise DomainError("kappa must lie in [0, 1]")
            diff = kappa * q_phi - o(phi.with_values(kappa * phi.values)).values
            rep.record(k, diff[mask], phi.x[mask], {"kappa": float(kappa)}, (phi,))
            k += 1
    return rep


def replay_witness(o: OperatorUnderTest, report: CheckReport, w: Witness) -> float:
    """Recompute the violation recorded in ``w``."""
    if report.name == "A1":
        diff, _ = _a1_diff(o, w.inputs[0], w.params["y"])
        return float(diff.max())
    if report.name == "A2":
        phi, psi = w.inputs
        return float(np.max(o(phi).values - o(psi).values))
    if report.name == "subhomogeneity":
        phi = w.inputs[0]
        kappa = w.params["kappa"]
        return float(np.max(kappa * o(phi).values - o(phi.with_values(kappa * phi.values)).values))
    if report.name == "SP":
        u = w.inputs[0]
        for _ in range(w.params["n_star"]):
            u = o(u)
        mask = (u.x > 0) & (u.x <= u.grid.x_max - 10.0)
        return float(-u.values[mask].min())
    raise DomainError(f"no replay for {report.name}")


# ---------------------------------------------------------------------------
# asymptotic hypotheses


def _iterate(op: Operator, phi: GridFunction, n: int) -> list[GridFunction]:
    out = []
    u = phi
    for _ in range(n):
        u = op(u)
        out.append(u)
    return out


def check_limit_hypotheses(
    family: LimitFamily,
    horizon: int,
    *,
    r_star: float | None = None,
    phi: GridFunction | None = None,
    window: float = 10.0,
    uc_threshold: float = 0.05,
    cone: tuple | None = None,
    eps: float = 0.5,
    aa_threshold: float = 0.05,
    a3_tol: float = 1e-6,
) -> list[CheckReport]:
    """Finite-horizon proxies for the limit-operator hypotheses.

    * A3: the last Cauchy difference between successive translates is below ``a3_tol``.
    * minus side (UAA): ``sup Q^n[r*]`` strictly decreases for ``n = 1..horizon``.
    * plus side (UC): ``sup_{|x| <= window} |Q^n[phi] - r*| < uc_threshold`` at ``n = horizon``.
    * plus side (AA), when ``cone = (c_minus_bar, c_plus_bar)`` is given in
      space units per application: ``sup Q^n[phi]`` outside
      ``[-n (c_minus_bar + eps), n (c_plus_bar + eps)]`` is below ``aa_threshold``
      at ``n = horizon`` and nonincreasing over the second half of the run.
    """
    grid = family.entries[0].grid
    r_star = family.model.r_star() if r_star is None else r_star
    reports = []

    a3 = CheckReport("A3", label=PROXY)
    diffs = family.cauchy_differences()
    a3.samples_tested = len(diffs)
    last = diffs[-1] if diffs else 0.0
    a3.max_violation = last - a3_tol
    a3.details = {"cauchy_differences": diffs, "ys": list(family.ys)}
    if last > a3_tol:
        a3.witnesses.append(Witness(len(diffs), None, last, {"y": family.ys[-1]}))
    reports.append(a3)

    op = family.operator
    if family.sign == "minus":
        uaa = CheckReport("UAA", label=PROXY)
        sups = [float(u.values.max()) for u in _iterate(op, GridFunction.constant(grid, r_star), horizon)]
        steps = np.diff(sups)
        uaa.samples_tested = horizon
        worst = float(steps.max()) if steps.size else -np.inf
        # a flat step already breaks strict decrease, so zero scores the smallest positive double
        uaa.max_violation = worst if worst < 0 else max(worst, np.finfo(float).tiny)
        uaa.details = {"sups": sups}
        for n in np.nonzero(steps >= 0)[0][:MAX_WITNESSES]:
            uaa.witnesses.append(Witness(int(n) + 2, None, float(steps[n]), {"n": int(n) + 2}))
        reports.append(uaa)
        return reports

    start = bump_fixture("h", 1.0, grid) if phi is None else phi
    start = start.with_values(start.values * min(1.0, r_star))
    its = _iterate(op, start, horizon)
    inner = np.abs(grid.x) <= window
    errs = [float(np.max(np.abs(u.values[inner] - r_star))) for u in its]
    uc = CheckReport("UC", label=PROXY, samples_tested=horizon)
    uc.max_violation = errs[-1] - uc_threshold if errs[-1] != uc_threshold else np.finfo(float).tiny
    uc.details = {"window_errors": errs}
    if errs[-1] >= uc_threshold:
        uc.witnesses.append(Witness(horizon, None, errs[-1], {"n": horizon}))
    reports.append(uc)

    if cone is not None:
        c_minus_bar, c_plus_bar = cone
        outs = []
        for n, u in enumerate(its, start=1):
            mask = (u.x < -n * (c_minus_bar + eps)) | (u.x > n * (c_plus_bar + eps))
            outs.append(float(u.values[mask].max()) if np.any(mask) else 0.0)
        aa = CheckReport("AA", label=PROXY, samples_tested=horizon)
        half = outs[len(outs) // 2 :]
        rises = np.diff(half)
        aa.max_violation = max(outs[-1] - aa_threshold, float(rises.max()) - SLACK if rises.size else -np.inf)
        if outs[-1] - aa_threshold == 0.0:
            aa.max_violation = max(aa.max_violation, np.finfo(float).tiny)
        aa.details = {"outside_sups": outs}
        if outs[-1] >= aa_threshold or (rises.size and rises.max() > SLACK):
            aa.witnesses.append(Witness(horizon, None, outs[-1], {"n": horizon}))
        reports.append(aa)
    return reports


def check_strong_positivity(o: OperatorUnderTest, phis: Sequence[GridFunction], n_star: int) -> CheckReport:
    """After ``n_star`` applications the iterate is positive on ``(0, x_max - 10]``."""
    rep = CheckReport("SP")
    for k, phi in enumerate(phis):
        if phi.values.min() < 0 or not np.any(phi.values > 0):
            raise DomainError("strong positivity needs nonzero nonnegative inputs")
        u = phi
        for _ in range(n_star):
            u = o(u)
        mask = (u.x > 0) & (u.x <= u.grid.x_max - 10.0)
        vals = u.values[mask]
        i = int(np.argmin(vals))
        low = float(vals[i])
        # zero itself is a failure, so a vanishing minimum scores the smallest positive double
        worst = -low if low > 0 else max(-low, np.finfo(float).tiny)
        rep.samples_tested += 1
        rep.max_violation = max(rep.max_violation, worst)
        if low <= 0 and len(rep.witnesses) < MAX_WITNESSES:
            rep.witnesses.append(Witness(k, float(u.x[mask][i]), -low, {"n_star": int(n_star)}, (phi,)))
    return rep


def check_minorant_family(
    f: Reaction,
    gamma: float,
    u_double_star: float,
    levels: int,
    op_factory: Callable[[Reaction], Operator],
    phis: Sequence[GridFunction],
    margin: float = 0.0,
) -> CheckReport:
    """``Q[phi] >= Q_l[phi]`` where ``Q_l`` uses the minorant with ``gamma / 2^l``."""
    rep = CheckReport("minorant-family")
    q = op_factory(f)
    base = [q(phi) for phi in phis]
    k = 0
    for level in range(levels):
        g_l = gamma / 2.0**level
        q_l = op_factory(lemma61_minorant(f, g_l, u_double_star))
        for phi, b in zip(phis, base):
            mask = _window(phi, margin, margin)
            diff = q_l(phi).values - b.values
            rep.record(k, diff[mask], phi.x[mask], {"gamma": g_l}, (phi,))
            k += 1
    return rep


# ---------------------------------------------------------------------------
# operators under test and deliberately broken variants


def frozen_frame_operator(model: ModelSpec, t0: float = 1.0, margin: float = 15.0, dt: float | None = None) -> OperatorUnderTest:
    """Solution map over ``t0`` seen in the frame moving with the habitat."""
    op = moving_frame_map(model, model.c_shift, t0, dt=dt)
    return OperatorUnderTest(op, model.r_star(), f"model {model.kind} frame map t0={t0}", margin)


def step_operator(model: ModelSpec, dt: float, *, check_cfl: bool = True, margin: float = 0.0) -> OperatorUnderTest:
    """A single forward-Euler step as an operator (no delay)."""
    if model.has_delay:
        raise DomainError("step_operator is defined for models without delay")

    def op(phi: GridFunction) -> GridFunction:
        return step(model, State(0.0, phi), dt, check_cfl=check_cfl).current

    return OperatorUnderTest(op, model.r_star(), f"model {model.kind} step dt={dt}", margin)


def pure_reaction_operator(f: Reaction, mu: float, t0: float, dt: float) -> OperatorUnderTest:
    """The nonlocal model with a Dirac kernel: dispersal vanishes, only ``-mu u + mu f`` acts."""
    n = max(1, int(round(t0 / dt)))
    h = t0 / n

    def op(phi: GridFunction) -> GridFunction:
        u = phi.values
        for _ in range(n):
            u = u + h * (-mu * u + mu * f(phi.x, u))
        return phi.with_values(u)

    return OperatorUnderTest(op, f.u_star, "pure reaction (Dirac dispersal)")

"""Command-line drivers: ``wavefront {speed,simulate,wave,steady,hypotheses,sweep}``.

Exit codes: 0 success, 1 the run finished but an analysis threshold was
not met, 2 usage, configuration or numerical error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, Scenario
from .csvio import csv_text, fmt, write_csv
from .errors import WavefrontError
from .evolve import moving_frame_map, simulate, stable_dt
from .fronts import FrontTrace, empirical_speed, interval_convergence, tail_decay
from .gridfn import GridFunction
from .hypotheses import (
    Lcg64,
    check_monotone,
    check_strong_positivity,
    check_subhomogeneous,
    check_translation_comparison,
    frozen_frame_operator,
    random_monotone,
    random_pair,
)
from .nonlinearity import bump_fixture
from .speeds import DispersionParams, kpp_local_speed, kpp_rd_speed, speed_report
from .waves import (
    SteadyParams,
    WaveParams,
    dirichlet_steady_oracle,
    monotone_wave_iterate,
    steady_residual,
    verify_connection,
    wave_map,
)

EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _analyses(doc: dict, kind: str) -> list[dict]:
    return [a for a in doc.get("analysis", []) if a["kind"] == kind]


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# speed


def cmd_speed(sc: Scenario, args) -> int:
    m = sc.model
    summary: list[list] = []
    if m.kind == "B":
        p = DispersionParams(m.d, m.mu, m.tau, m.f.fprime0, m.kernel)
        cs = sc.doc.get("speed", {}).get("c_values") or [round(-3.0 + 0.1 * i, 10) for i in range(61)]
        rep = speed_report(p, cs)
        if args.out:
            write_csv(_out_dir(args) / "speeds.csv", ["c", "c_plus_star", "c_minus_star"], rep.rows())
        summary += [["c_star", rep.c_star], ["c_star_dual", rep.c_star_dual], ["argmin_rho", rep.argmin_rho]]
    elif m.kind == "A":
        if m.tau > 0 or not m.kernel.is_dirac:
            raise _Usage("model A has a closed-form speed only with tau = 0 and a Dirac kernel")
        value, degenerate = kpp_local_speed(m.d, m.mu, m.f.fprime0)
        summary += [["c_star", value], ["degenerate", degenerate]]
    elif m.kind == "D":
        plus = kpp_rd_speed(m.d, m.h.hprime_plus)
        minus = kpp_rd_speed(m.d, m.h.hprime_minus)
        summary += [["c_star", plus], ["c_plus_star", plus], ["c_minus_star", minus]]
    else:
        raise _Usage("no speed formula for the Dirichlet model")
    text = csv_text(["quantity", "value"], summary)
    if args.out:
        (_out_dir(args) / "summary.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _run(sc: Scenario):
    doc = sc.doc
    if "run" not in doc:
        raise ConfigError("/run", "this command needs a run section")
    grid = cfgmod.build_grid(doc)
    phi0 = cfgmod.build_initial(doc, sc.model, grid)
    run_cfg = doc["run"]
    r_star = sc.model.r_star()
    traces = [FrontTrace(0.5 * r_star, "rightmost"), FrontTrace(0.5 * r_star, "leftmost")]
    for a in _analyses(doc, "speed"):
        traces.append(FrontTrace(a.get("level", 0.5 * r_star), a.get("side", "rightmost")))
    rec = simulate(
        sc.model,
        phi0,
        run_cfg["T"],
        traces,
        dt=run_cfg.get("dt"),
        record_every=run_cfg.get("record_every", 1.0),
    )
    return grid, rec, traces


def _diagnostics(sc: Scenario, rec, traces) -> list[list]:
    """Rows ``analysis, quantity, value, threshold, passed``."""
    doc = sc.doc
    T = rec.times[-1]
    rows = []
    for i, a in enumerate(_analyses(doc, "speed")):
        tr = traces[2 + i]
        lo, hi = a.get("window", [20.0, T])
        fit = empirical_speed(tr, (lo, hi))
        exp = a.get("expect")
        ok = None if exp is None else bool(exp[0] <= fit.slope <= exp[1])
        rows.append([f"speed[{i}]", "slope", fit.slope, None if exp is None else f"{fmt(exp[0])}..{fmt(exp[1])}", ok])
        rows.append([f"speed[{i}]", "stderr", fit.stderr, None, None])
    for i, a in enumerate(_analyses(doc, "interval")):
        curve = interval_convergence(rec, sc.model.r_star(), a["c_lo"], a["c_hi"], a["eps"])
        thr = a.get("threshold", 0.05)
        if len(curve):
            val = curve.at(a.get("at", T))
            rows.append([f"interval[{i}]", "error", val, thr, bool(val < thr)])
        else:
            rows.append([f"interval[{i}]", "error", None, thr, None])
    for i, a in enumerate(_analyses(doc, "tail")):
        curve = tail_decay(rec, a["c"], a["eps"], "behind")
        thr = a.get("threshold", 0.02)
        if len(curve):
            val = curve.at(a.get("at", T))
            rows.append([f"tail[{i}]", "sup", val, thr, bool(val < thr)])
        else:
            rows.append([f"tail[{i}]", "sup", None, thr, None])
    return rows


def cmd_simulate(sc: Scenario, args) -> int:
    out = _out_dir(args)
    grid, rec, traces = _run(sc)
    stride = sc.doc["run"].get("x_stride", 1)
    xs = grid.x[::stride]
    write_csv(out / "run.csv", ["t"] + [fmt(float(x)) for x in xs], ([t] + list(u.values[::stride]) for t, u in zip(rec.times, rec.snapshots)))
    write_csv(
        out / "fronts.csv",
        ["t", "right", "left"],
        ([t, r, l] for t, r, l in zip(traces[0].times, traces[0].positions, traces[1].positions)),
    )
    rows = _diagnostics(sc, rec, traces)
    write_csv(out / "diagnostics.csv", ["analysis", "quantity", "value", "threshold", "passed"], rows)
    return EXIT_THRESHOLD if any(r[4] is False for r in rows) else EXIT_OK


# ---------------------------------------------------------------------------
# wave / steady


def cmd_wave(sc: Scenario, args) -> int:
    items = _analyses(sc.doc, "wave")
    if not items:
        raise ConfigError("/analysis", "wave needs an analysis entry of kind 'wave'")
    a = items[0]
    grid = cfgmod.build_grid(sc.doc)
    m = sc.model
    c = a["c"]
    if m.kind == "B":
        mapping = wave_map(c, WaveParams(m.d, m.mu, m.kernel, m.f, m.tau))
    else:
        mapping = moving_frame_map(m, c, max(1.0, 2.0 * m.tau if m.has_delay else 1.0))
    w = monotone_wave_iterate(mapping, m.r_star(), a.get("tol", 1e-10), a.get("max_iter", 2000), grid=grid, speed=c)
    conn = verify_connection(w, m.r_star(), a.get("tol_limits", 1e-3))
    out = _out_dir(args)
    write_csv(out / "wave.csv", ["x", "W"], w.rows())
    meta = w.meta()
    meta.update({"left_limit_ok": conn.left_limit, "right_limit_ok": conn.right_limit, "profile_monotone": conn.monotone})
    (out / "wave.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK if (w.converged and conn.passed) else EXIT_THRESHOLD


def cmd_steady(sc: Scenario, args) -> int:
    m = sc.model
    a = (_analyses(sc.doc, "steady") or [{}])[0]
    grid = cfgmod.build_grid(sc.doc)
    out = _out_dir(args)
    summary: list[list] = []
    if m.kind == "C":
        if grid.x_min != 0.0:
            raise ConfigError("/grid/x_min", "the Dirichlet model needs x_min = 0")
        sp = SteadyParams(m.d, m.mu, m.f)
        oracle = dirichlet_steady_oracle(sp, grid.x_max, dx=grid.dx)
        _, rec, _ = _run(sc)
        final = rec.snapshots[-1]
        cmp_to = a.get("compare_to", 50.0)
        mask = grid.x <= cmp_to
        diff = float(np.max(np.abs(final.values[mask] - oracle.values[mask])))
        tol = a.get("tol", 1e-2)
        write_csv(out / "steady.csv", ["x", "u"], zip(grid.x, final.values))
        write_csv(out / "oracle.csv", ["x", "W"], zip(grid.x, oracle.values))
        summary += [
            ["oracle_residual", steady_residual(oracle, sp, 1.0, grid.x_max - 1.0)],
            ["sup_difference", diff],
            ["tolerance", tol],
            ["passed", diff < tol],
        ]
        ok = diff < tol
    elif m.kind == "D":
        t0 = a.get("t0", 1.0)
        start = GridFunction.constant(grid, m.h.M_star)
        w = monotone_wave_iterate(
            moving_frame_map(m, 0.0, t0), m.h.M_star, a.get("tol", 1e-9), a.get("max_iter", 5000), start=start
        )
        write_csv(out / "steady.csv", ["x", "u"], w.rows())
        summary += [
            ["iterations", w.iterations],
            ["residual", w.residual],
            ["left_limit", w.limits[0]],
            ["right_limit", w.limits[1]],
            ["converged", w.converged],
        ]
        ok = w.converged
    else:
        raise _Usage("steady is available for models C and D")
    write_csv(out / "summary.csv", ["quantity", "value"], summary)
    sys.stdout.write(csv_text(["quantity", "value"], summary))
    return EXIT_OK if ok else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# hypotheses


def cmd_hypotheses(sc: Scenario, args) -> int:
    m = sc.model
    a = (_analyses(sc.doc, "hypotheses") or [{}])[0]
    seed = a.get("seed", 1)
    n = a.get("n_samples", 10)
    grid = cfgmod.build_grid(sc.doc)
    t0 = max(1.0, 2.0 * m.tau) if m.has_delay else 1.0
    o = frozen_frame_operator(m, t0)
    r_star = m.r_star()
    rng = Lcg64(seed)
    phis = [random_monotone(rng, grid, r_star) for _ in range(n)]
    pairs = [random_pair(rng, grid, r_star) for _ in range(n)]
    ys = [grid.dx * k for k in (1, 10, 20)]
    # the explicit stencil moves support one cell per step, so apply often enough to fill the grid
    dt = stable_dt(m, grid)
    reach = max(t0 / dt, 1.0) * grid.dx
    n_star = min(50, math.ceil(grid.x_max / reach) + 1)
    bump = bump_fixture("h", 1.0, grid)
    reports = [
        check_translation_comparison(o, phis, ys),
        check_monotone(o, pairs),
        check_subhomogeneous(o, phis, [0.25, 0.5, 0.75]),
        check_strong_positivity(o, [bump.with_values(r_star * bump.values)], n_star),
    ]
    doc = {"operator": o.label, "seed": seed, "n_samples": n, "reports": [r.to_dict() for r in reports]}
    out = _out_dir(args)
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# sweep


SWEEPABLE = ("c_shift", "d", "mu", "tau")


def parse_values(spec: str) -> list[float]:
    try:
        a, b, h = (float(p) for p in spec.split(":"))
    except ValueError as exc:
        raise _Usage(f"--values must look like a:b:step, got {spec!r}") from exc
    if not h > 0 or b < a:
        raise _Usage("--values needs step > 0 and a <= b")
    n = int(math.floor((b - a) / h + 1e-9)) + 1
    return [round(a + i * h, 12) for i in range(n)]


def _sweep_one(doc: dict, out: str) -> int:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / "config.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return main(["simulate", "--config", str(path / "config.json"), "--out", str(path)])


def cmd_sweep(sc: Scenario, args) -> int:
    if args.param not in SWEEPABLE:
        raise _Usage(f"--param must be one of {', '.join(SWEEPABLE)}")
    values = parse_values(args.values)
    out = _out_dir(args)
    base = {k: v for k, v in sc.doc.items() if not k.startswith("_")}
    jobs = []
    for v in values:
        doc = copy.deepcopy(base)
        doc["model"][args.param] = v
        jobs.append((doc, str(out / f"{args.param}={fmt(v)}")))
    workers = int(os.environ.get("WAVEFRONT_THREADS", "0") or 0) or (os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs)))
    if workers == 1:
        codes = [_sweep_one(d, o) for d, o in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(_sweep_one, *zip(*jobs)))
    write_csv(out / "summary.csv", [args.param, "exit_code", "directory"], ([v, c, Path(o).name] for v, (_, o), c in zip(values, jobs, codes)))
    return max(codes) if codes else EXIT_OK


# ---------------------------------------------------------------------------


COMMANDS = {
    "speed": cmd_speed,
    "simulate": cmd_simulate,
    "wave": cmd_wave,
    "steady": cmd_steady,
    "hypotheses": cmd_hypotheses,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavefront", description="Spreading speeds, waves and monotonicity checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory")
        if name == "sweep":
            p.add_argument("--param", required=True, help="model field to vary")
            p.add_argument("--values", required=True, help="a:b:step (inclusive)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        sc = Scenario.from_file(args.config)
        return COMMANDS[args.command](sc, args)
    except ConfigError as exc:
        print(f"config error at {exc.pointer or '/'}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WavefrontError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

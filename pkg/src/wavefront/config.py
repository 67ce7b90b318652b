"""Scenario configuration: JSON schema, validation and object construction."""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .errors import DomainError
from .evolve import ModelSpec
from .gridfn import Grid, GridFunction
from .kernels import Kernel
from .nonlinearity import ShiftProfile, bump_fixture, heterogeneous_logistic, shifted_logistic, tabulated_reaction

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_NUMS = {"type": "array", "items": _NUM, "minItems": 2}


def _obj(props: dict, required=(), **extra) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False, **extra}


def _kind(name: str, props: dict, required=()) -> dict:
    return _obj({"kind": {"const": name}, **props}, ["kind", *required])


PROFILE = {
    "oneOf": [
        _kind("constant", {"value": _NUM}, ["value"]),
        _kind("smoothstep", {"left": _NUM, "right": _NUM, "width": _POS}, ["left", "right"]),
        _kind("tabulated", {"s": _NUMS, "r": _NUMS}, ["s", "r"]),
    ]
}

REACTION = {
    "oneOf": [
        _kind("shifted-logistic", {"r_profile": PROFILE}, ["r_profile"]),
        _kind("tabulated", {"u": _NUMS, "f": _NUMS}, ["u", "f"]),
        _kind("logistic", {"r_profile": PROFILE}, ["r_profile"]),
    ]
}

KERNEL = {
    "oneOf": [
        _kind("dirac", {}),
        _kind("gaussian", {"alpha": _POS, "cutoff": _POS}, ["alpha"]),
        _kind("tabulated", {"x": _NUMS, "k": _NUMS}, ["x", "k"]),
    ]
}

MODEL = _obj(
    {
        "kind": {"enum": ["A", "B", "C", "D"]},
        "d": _POS,
        "mu": _POS,
        "tau": _NONNEG,
        "c_shift": _NUM,
        "kernel": KERNEL,
        "reaction": REACTION,
    },
    ["kind", "d", "reaction"],
)

GRID = _obj({"x_min": _NUM, "x_max": _NUM, "dx": _POS}, ["x_min", "x_max", "dx"])

INITIAL = {
    "oneOf": [
        _kind("bump", {"d": _POS, "center": _NUM, "height": _POS}, ["d"]),
        _kind("heaviside", {"x0": _NUM, "value": _POS}, ["x0"]),
        _kind("constant", {"v": _NONNEG}, ["v"]),
        _kind("tabulated", {"file": {"type": "string"}}, ["file"]),
    ]
}

RUN = _obj({"T": _NONNEG, "record_every": _POS, "dt": _POS, "x_stride": {"type": "integer", "minimum": 1}}, ["T"])

_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
ANALYSIS_ITEM = {
    "oneOf": [
        _kind("speed", {"level": _POS, "window": _RANGE, "side": {"enum": ["rightmost", "leftmost"]}, "expect": _RANGE}),
        _kind("interval", {"c_lo": _NUM, "c_hi": _NUM, "eps": _POS, "at": _NONNEG, "threshold": _POS}, ["c_lo", "c_hi", "eps"]),
        _kind("tail", {"c": _NUM, "eps": _NONNEG, "at": _NONNEG, "threshold": _POS}, ["c", "eps"]),
        _kind("wave", {"c": _NUM, "tol": _POS, "max_iter": {"type": "integer", "minimum": 1}, "tol_limits": _POS}, ["c"]),
        _kind("steady", {"t0": _POS, "tol": _POS, "max_iter": {"type": "integer", "minimum": 1}, "compare_to": _POS}),
        _kind("hypotheses", {"seed": {"type": "integer", "minimum": 0}, "n_samples": {"type": "integer", "minimum": 1}}),
    ]
}

SPEED = _obj({"c_values": {"type": "array", "items": _NUM, "minItems": 1}})

SCHEMA = _obj(
    {
        "version": {"const": 1},
        "model": MODEL,
        "grid": GRID,
        "initial": INITIAL,
        "run": RUN,
        "analysis": {"type": "array", "items": ANALYSIS_ITEM},
        "speed": SPEED,
    },
    ["version", "model"],
)


class ConfigError(Exception):
    """Invalid scenario; ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer
        self.message = message


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def _deepest(error: jsonschema.ValidationError) -> jsonschema.ValidationError:
    """For ``oneOf`` failures descend into the branch whose ``kind`` matched."""
    if error.validator == "oneOf" and error.context:
        branches: dict = {}
        for e in error.context:
            branches.setdefault(e.schema_path[0], []).append(e)
        for errs in branches.values():
            if not any(e.validator == "const" and list(e.relative_path) == ["kind"] for e in errs):
                return _deepest(min(errs, key=lambda e: len(e.path)))
    return error


def validate(doc) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.path), list(map(str, e.path))))
    if not errors:
        return
    err = _deepest(errors[0])
    path = list(err.absolute_path)
    if err.validator == "required" and isinstance(err.instance, dict):
        missing = [p for p in err.validator_value if p not in err.instance]
        raise ConfigError(_pointer(path + missing[:1]), err.message)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        raise ConfigError(_pointer(path + extra[:1]), err.message)
    raise ConfigError(_pointer(path), err.message)


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    validate(doc)
    doc = copy.deepcopy(doc)
    doc["_base"] = str(Path(path).resolve().parent)
    return doc


# ---------------------------------------------------------------------------
# builders


def build_profile(cfg: dict) -> ShiftProfile:
    if cfg["kind"] == "constant":
        return ShiftProfile.constant(cfg["value"])
    if cfg["kind"] == "smoothstep":
        return ShiftProfile.smoothstep(cfg["left"], cfg["right"], cfg.get("width", 10.0))
    return ShiftProfile.tabulated(cfg["s"], cfg["r"])


def build_kernel(cfg: dict | None) -> Kernel | None:
    if cfg is None:
        return None
    if cfg["kind"] == "dirac":
        return Kernel.dirac()
    if cfg["kind"] == "gaussian":
        return Kernel.gaussian(cfg["alpha"], cfg.get("cutoff"))
    return Kernel.tabulated(cfg["x"], cfg["k"])


def build_model(doc: dict) -> ModelSpec:
    m = doc["model"]
    kind = m["kind"]
    rc = m["reaction"]
    try:
        if kind == "D":
            if rc["kind"] != "logistic":
                raise ConfigError("/model/reaction/kind", "model D needs the 'logistic' reaction")
            return ModelSpec("D", m["d"], h=heterogeneous_logistic(build_profile(rc["r_profile"])))
        if "mu" not in m:
            raise ConfigError("/model/mu", f"model {kind} needs mu")
        if rc["kind"] == "shifted-logistic":
            f = shifted_logistic(build_profile(rc["r_profile"]), m["mu"])
        elif rc["kind"] == "tabulated":
            f = tabulated_reaction(rc["u"], rc["f"])
        else:
            raise ConfigError("/model/reaction/kind", f"model {kind} needs a birth function, not 'logistic'")
        return ModelSpec(
            kind,
            m["d"],
            mu=m["mu"],
            tau=m.get("tau", 0.0),
            c_shift=m.get("c_shift", 0.0),
            kernel=build_kernel(m.get("kernel")),
            f=f,
        )
    except DomainError as exc:
        raise ConfigError("/model", str(exc)) from exc


def build_grid(doc: dict) -> Grid:
    if "grid" not in doc:
        raise ConfigError("/grid", "this command needs a grid")
    g = doc["grid"]
    try:
        return Grid.from_bounds(g["x_min"], g["x_max"], g["dx"])
    except DomainError as exc:
        raise ConfigError("/grid", str(exc)) from exc


def build_initial(doc: dict, model: ModelSpec, grid: Grid) -> GridFunction:
    if "initial" not in doc:
        raise ConfigError("/initial", "this command needs initial data")
    ic = doc["initial"]
    policy = model.default_policy()
    kind = ic["kind"]
    if kind == "bump":
        base = bump_fixture("xi_d", ic["d"], Grid(grid.x_min - ic.get("center", 0.0), grid.dx, grid.n))
        vals = ic.get("height", model.r_star()) * base.values
    elif kind == "heaviside":
        vals = np.where(grid.x >= ic["x0"], ic.get("value", model.r_star()), 0.0)
    elif kind == "constant":
        vals = np.full(grid.n, float(ic["v"]))
    else:
        path = Path(doc.get("_base", ".")) / ic["file"]
        try:
            with open(path, encoding="utf-8") as fh:
                rows = [r for r in csv.reader(fh) if r]
            data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        except (OSError, ValueError) as exc:
            raise ConfigError("/initial/file", f"cannot read tabulated data: {exc}") from exc
        vals = np.interp(grid.x, data[:, 0], data[:, 1])
    if model.kind == "C":
        vals = np.where(grid.x > 0, vals, 0.0)
    if np.any(np.asarray(vals) < 0):
        raise ConfigError("/initial", "initial data must be nonnegative")
    return GridFunction(grid, vals, policy)


def analysis_speeds(doc: dict) -> list[float]:
    out = [0.0]
    for item in doc.get("analysis", []):
        out.extend(float(item[key]) for key in ("c_lo", "c_hi", "c") if key in item)
    return out


def check_grid_extent(doc: dict, margin: float = 10.0) -> None:
    """Fronts moving at the analysed speeds must stay ``margin`` inside the grid up to ``T``."""
    if "grid" not in doc or "run" not in doc:
        return
    g, T = doc["grid"], doc["run"]["T"]
    speeds = analysis_speeds(doc)
    hi = max(speeds) * T + margin
    lo = min(speeds) * T - margin
    half_line = doc.get("model", {}).get("kind") == "C"
    if g["x_max"] < hi:
        raise ConfigError("/grid/x_max", f"x_max={g['x_max']} must be at least {hi} to keep fronts inside the grid")
    if g["x_min"] > lo and not half_line:
        raise ConfigError("/grid/x_min", f"x_min={g['x_min']} must be at most {lo} to keep fronts inside the grid")


@dataclass(frozen=True)
class Scenario:
    doc: dict
    model: ModelSpec

    @classmethod
    def from_file(cls, path) -> Scenario:
        doc = load(path)
        model = build_model(doc)
        check_grid_extent(doc)
        return cls(doc, model)

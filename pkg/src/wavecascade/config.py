"""JSON run configuration: loading and fail-fast validation.

Example::

    {
      "nonlinearity": {"kind": "poly", "coefficients": [0, -1]},
      "initial": {"phi": "0.4*cos(x)", "psi": "0", "sup_phi": 0.4, "sup_psi": 0},
      "branching": {"kind": "custom", "p": {"0": 0.5, "1": 0.5}},
      "quadrature": {"tol": 1e-10, "max_depth": 40},
      "caps": {"max_vertices": 1000000, "max_generation": 10000},
      "defaults": {"samples": 100000, "seed": 1, "threads": 1},
      "oracle": {"x_lo": -4, "x_hi": 4, "nx": 801, "t_max": 0.6, "nt": 121},
      "horizon": {"scan_cap": 10.0, "steps": 1000}
    }

Only ``nonlinearity`` and ``initial.phi`` are required.  Unknown keys are
rejected.  Every problem is reported at once, each tagged with its JSON path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import jsonschema

from . import branching, series
from .cascade import Caps
from .dalembert import InitialData, QuadratureSpec
from .errors import BranchingError, ConfigError, ExpressionError
from .expr import parse
from .oracle import GridSpec

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POSINT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["nonlinearity", "initial"],
    "properties": {
        "nonlinearity": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["poly", "named"]}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": "poly"}}},
                 "then": {"additionalProperties": False, "required": ["coefficients"],
                          "properties": {"kind": {}, "coefficients": {
                              "type": "array", "items": _NUM, "minItems": 1}}}},
                {"if": {"properties": {"kind": {"const": "named"}}},
                 "then": {"additionalProperties": False, "required": ["name", "order"],
                          "properties": {"kind": {},
                                         "name": {"enum": list(series.FAMILIES)},
                                         "scale": _NUM,
                                         "order": {"type": "integer", "minimum": 0}}}},
            ],
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["phi"],
            "properties": {"phi": {"type": "string"}, "psi": {"type": "string"},
                           "sup_phi": _NONNEG, "sup_psi": _NONNEG},
        },
        "branching": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["default", "custom"]}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": "default"}}},
                 "then": {"additionalProperties": False, "properties": {"kind": {}}}},
                {"if": {"properties": {"kind": {"const": "custom"}}},
                 "then": {"additionalProperties": False, "required": ["p"],
                          "properties": {"kind": {}, "p": {
                              "type": "object", "minProperties": 1,
                              "propertyNames": {"pattern": "^[0-9]+$"},
                              "additionalProperties": _NUM}}}},
            ],
        },
        "quadrature": {
            "type": "object", "additionalProperties": False,
            "properties": {"tol": _POS, "max_depth": {"type": "integer", "minimum": 0}},
        },
        "caps": {
            "type": "object", "additionalProperties": False,
            "properties": {"max_vertices": _POSINT, "max_generation": _POSINT},
        },
        "defaults": {
            "type": "object", "additionalProperties": False,
            "properties": {"samples": _POSINT,
                           "seed": {"type": "integer", "minimum": 0,
                                    "maximum": 2**64 - 1},
                           "threads": _POSINT},
        },
        "oracle": {
            "type": "object", "additionalProperties": False,
            "required": ["x_lo", "x_hi", "nx", "t_max", "nt"],
            "properties": {"x_lo": _NUM, "x_hi": _NUM,
                           "nx": {"type": "integer", "minimum": 2},
                           "t_max": _POS, "nt": {"type": "integer", "minimum": 2},
                           "max_iter": _POSINT, "tol": _POS},
        },
        "horizon": {
            "type": "object", "additionalProperties": False,
            "properties": {"scan_cap": _POS, "steps": _POSINT},
        },
    },
}


@dataclass(frozen=True)
class Config:
    series: series.PowerSeries
    data: InitialData
    law: branching.BranchingLaw
    quad: QuadratureSpec
    caps: Caps
    samples: int = 10_000
    seed: int = 0
    threads: int = 1
    grid: Optional[GridSpec] = None
    picard_max_iter: int = 200
    picard_tol: float = 1e-10
    scan_cap: float = 10.0
    scan_steps: int = 1000

    def t_star(self) -> float:
        return branching.t_star(self.law, self.data, self.scan_cap, self.scan_steps)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate(raw) -> Config:
    """Build a :class:`Config` from parsed JSON or raise ConfigError with every problem."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    problems = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        if err.validator in ("if", "allOf"):
            continue
        problems.append((_path(err.absolute_path), err.message))
    if problems:
        raise ConfigError(problems)

    nl = raw["nonlinearity"]
    try:
        if nl["kind"] == "poly":
            s = series.poly(nl["coefficients"])
        else:
            s = series.from_named(nl["name"], float(nl.get("scale", 1.0)), int(nl["order"]))
    except ValueError as exc:
        problems.append(("$.nonlinearity", str(exc)))
        s = None

    init = raw["initial"]
    exprs = {}
    for key, default in (("phi", None), ("psi", "0")):
        src = init.get(key, default)
        try:
            exprs[key] = parse(src)
        except ExpressionError as exc:
            problems.append((f"$.initial.{key}", str(exc)))
    data = None
    if len(exprs) == 2:
        try:
            data = InitialData(exprs["phi"], exprs["psi"], init.get("sup_phi"),
                               init.get("sup_psi"))
        except ValueError as exc:
            problems.append(("$.initial", str(exc)))

    law = None
    br = raw.get("branching", {"kind": "default"})
    if s is not None:
        try:
            if br["kind"] == "default":
                law = branching.build_default(s)
            else:
                law = branching.from_custom(br["p"], s)
        except BranchingError as exc:
            problems.append(("$.branching.p" if br["kind"] == "custom" else "$.branching",
                             str(exc)))

    q = raw.get("quadrature", {})
    quad = QuadratureSpec(float(q.get("tol", 1e-10)), int(q.get("max_depth", 40)))
    c = raw.get("caps", {})
    caps = Caps(int(c.get("max_vertices", 10**6)), int(c.get("max_generation", 10**4)))

    grid = None
    o = raw.get("oracle")
    if o is not None:
        try:
            grid = GridSpec(float(o["x_lo"]), float(o["x_hi"]), int(o["nx"]),
                            float(o["t_max"]), int(o["nt"]))
        except ValueError as exc:
            problems.append(("$.oracle", str(exc)))

    if problems:
        raise ConfigError(problems)

    d = raw.get("defaults", {})
    h = raw.get("horizon", {})
    o = o or {}
    return Config(s, data, law, quad, caps,
                  samples=int(d.get("samples", 10_000)), seed=int(d.get("seed", 0)),
                  threads=int(d.get("threads", 1)), grid=grid,
                  picard_max_iter=int(o.get("max_iter", 200)),
                  picard_tol=float(o.get("tol", 1e-10)),
                  scan_cap=float(h.get("scan_cap", 10.0)), scan_steps=int(h.get("steps", 1000)))


def load_config(path) -> Config:
    """Read and validate a config file.

    A missing or unreadable file, malformed JSON and semantic problems all
    raise ConfigError.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([("$", f"cannot read config file {path}: {exc.strerror or exc}")]) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"malformed JSON: {exc}")]) from None
    return validate(raw)

"""JSON problem files: schema, validation and conversion to checker inputs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import DimensionError, ExprSyntaxError, NotPositiveDefinite, OriginNotInterior, SchemaError
from .expr import VectorField, const, parse_expr, sub, substitute, add, var, to_string
from .oracle import System, SystemKind
from .sets import Ellipsoid, Polyhedron, SublevelSet
from .verdict import Certificate, Mode

_NUMBER = {"type": "number"}
_VECTOR = {"type": "array", "items": _NUMBER, "minItems": 1}
_MATRIX = {"type": "array", "items": _VECTOR, "minItems": 1}
_EXPR = {"type": "string", "minLength": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "invacheck problem",
    "type": "object",
    "required": ["dimension", "system", "set"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "dimension": {"type": "integer", "minimum": 1},
        "system": {
            "type": "object",
            "required": ["kind", "dynamics"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["discrete", "continuous"]},
                "dynamics": {"type": "array", "items": _EXPR, "minItems": 1},
            },
        },
        "set": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["polyhedron", "ellipsoid", "sublevel"]}},
            "oneOf": [
                {
                    "properties": {"kind": {"const": "polyhedron"}, "G": _MATRIX, "b": _VECTOR},
                    "required": ["G", "b"],
                    "additionalProperties": False,
                },
                {
                    "properties": {"kind": {"const": "ellipsoid"}, "Q": _MATRIX, "center": _VECTOR},
                    "required": ["Q"],
                    "additionalProperties": False,
                },
                {
                    "properties": {"kind": {"const": "sublevel"}, "g": _EXPR, "interior_hint": _VECTOR},
                    "required": ["g"],
                    "additionalProperties": False,
                },
            ],
        },
        "mode": {"enum": ["global", "restricted"]},
        "certificate": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "H": {"type": "array", "items": {"type": "array", "items": {"type": "number", "minimum": 0}}},
                "beta": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "minimum": 0},
            },
        },
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "box": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                "seed": {"type": "integer", "minimum": 0},
                "starts": {"type": "integer", "minimum": 1},
                "max_iters": {"type": "integer", "minimum": 1},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

_CERT_FOR_SET = {"polyhedron": "H", "ellipsoid": "beta", "sublevel": "alpha"}


@dataclass
class ProblemSpec:
    dimension: int
    system: System
    set: Polyhedron | Ellipsoid | SublevelSet
    set_kind: str
    mode: Mode = Mode.GLOBAL
    certificate: Certificate | None = None
    box: tuple[float, float] = (-100.0, 100.0)
    seed: int | None = None
    starts: int | None = None
    max_iters: int | None = None
    oracle_samples: int = 256
    oracle_horizon: float | None = None
    raw: dict = field(default_factory=dict)

    @property
    def discrete(self) -> bool:
        return self.system.kind is SystemKind.DISCRETE


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


def validate(doc: Any) -> None:
    """Raise :class:`SchemaError` for the first violation found.

    Structural checks use the JSON schema; dimension agreement and
    expression syntax are checked afterwards.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = jsonschema.exceptions.best_match(errors) or errors[0]
        if err.validator == "oneOf":
            # a failing sibling keyword (say the kind enum) names the field exactly
            deeper = [e for e in errors if e.validator != "oneOf" and len(e.absolute_path) > len(err.absolute_path)]
            if deeper:
                err = deeper[0]
        raise SchemaError(_pointer(err.absolute_path), err.message)

    n = doc["dimension"]
    dyn = doc["system"]["dynamics"]
    if len(dyn) != n:
        raise SchemaError("/system/dynamics", f"expected {n} expressions, got {len(dyn)}")
    for j, text in enumerate(dyn):
        _check_expr(text, n, f"/system/dynamics/{j}")

    s = doc["set"]
    kind = s["kind"]
    if kind == "polyhedron":
        G, b = s["G"], s["b"]
        for i, row in enumerate(G):
            if len(row) != n:
                raise SchemaError(f"/set/G/{i}", f"row has {len(row)} entries, expected {n}")
        if len(b) != len(G):
            raise SchemaError("/set/b", f"expected {len(G)} entries, got {len(b)}")
    elif kind == "ellipsoid":
        Q = s["Q"]
        if len(Q) != n:
            raise SchemaError("/set/Q", f"expected {n} rows, got {len(Q)}")
        for i, row in enumerate(Q):
            if len(row) != n:
                raise SchemaError(f"/set/Q/{i}", f"row has {len(row)} entries, expected {n}")
        if "center" in s and len(s["center"]) != n:
            raise SchemaError("/set/center", f"expected {n} entries")
    else:
        _check_expr(s["g"], n, "/set/g")
        if "interior_hint" in s and len(s["interior_hint"]) != n:
            raise SchemaError("/set/interior_hint", f"expected {n} entries")

    cert = doc.get("certificate")
    if cert is not None:
        key = next(iter(cert))
        if key != _CERT_FOR_SET[kind]:
            raise SchemaError(f"/certificate/{key}", f"a {kind} takes certificate '{_CERT_FOR_SET[kind]}'")
        if key == "H":
            m = len(s["G"])
            H = cert["H"]
            if len(H) != m or any(len(r) != m for r in H):
                raise SchemaError("/certificate/H", f"H must be {m}x{m}")
        if doc["system"]["kind"] == "continuous":
            raise SchemaError("/certificate", "continuous systems take no certificate")
    if "mode" in doc and doc["system"]["kind"] == "continuous":
        raise SchemaError("/mode", "mode applies to discrete systems only")
    box = doc.get("search", {}).get("box")
    if box is not None and not box[0] < box[1]:
        raise SchemaError("/search/box", "box must satisfy lo < hi")


def _check_expr(text: str, n: int, path: str) -> None:
    try:
        parse_expr(text, n)
    except ExprSyntaxError as exc:
        raise SchemaError(path, f"syntax error {exc}") from None
    except DimensionError as exc:
        raise SchemaError(path, str(exc)) from None


def center_ellipsoid_helper(Q, c, dynamics: list[str], kind: str = "discrete") -> dict:
    """Shift an ellipsoid ``(x - c)^T Q (x - c) <= 1`` to the origin.

    In coordinates ``y = x - c`` a discrete map becomes ``y+ = f(y + c) - c``
    and a continuous field ``y' = f(y + c)``. Returns the problem-file
    fragment ``{"set": ..., "system": ...}``.

    Raises:
        NotPositiveDefinite: ``Q`` is not positive definite.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    n = Q.shape[0]
    Ellipsoid(Q)
    if c.size != n or len(dynamics) != n:
        raise DimensionError("center and dynamics must match the dimension of Q")
    shift = {i + 1: add(var(i + 1), const(float(c[i]))) for i in range(n)}
    out = []
    for i, text in enumerate(dynamics):
        e = substitute(parse_expr(text, n), shift)
        if kind == "discrete":
            e = sub(e, const(float(c[i])))
        out.append(to_string(e))
    return {"set": {"kind": "ellipsoid", "Q": Q.tolist()}, "system": {"kind": kind, "dynamics": out}}


def from_dict(doc: dict) -> ProblemSpec:
    validate(doc)
    n = doc["dimension"]
    sysd = doc["system"]
    s = doc["set"]
    dynamics = list(sysd["dynamics"])
    kind = s["kind"]
    try:
        if kind == "polyhedron":
            st = Polyhedron(np.array(s["G"], dtype=float), np.array(s["b"], dtype=float))
        elif kind == "ellipsoid":
            if "center" in s and any(v != 0 for v in s["center"]):
                frag = center_ellipsoid_helper(s["Q"], s["center"], dynamics, sysd["kind"])
                dynamics = frag["system"]["dynamics"]
            st = Ellipsoid(np.array(s["Q"], dtype=float))
        else:
            hint = s.get("interior_hint")
            st = SublevelSet(parse_expr(s["g"], n), n, interior_hint=None if hint is None else np.array(hint, float))
    except NotPositiveDefinite as exc:
        raise SchemaError("/set/Q", f"not positive definite: {exc}") from None
    except (ValueError, OriginNotInterior) as exc:
        raise SchemaError("/set", str(exc)) from None
    f = VectorField.parse(dynamics, n)
    system = System(SystemKind(sysd["kind"]), f)
    cert = None
    mode = Mode(doc.get("mode", "global"))
    if "certificate" in doc:
        key, val = next(iter(doc["certificate"].items()))
        cert = Certificate(key, val, mode)
    search = doc.get("search", {})
    oracle = doc.get("oracle", {})
    return ProblemSpec(
        dimension=n,
        system=system,
        set=st,
        set_kind=kind,
        mode=mode,
        certificate=cert,
        box=tuple(search.get("box", (-100.0, 100.0))),
        seed=search.get("seed"),
        starts=search.get("starts"),
        max_iters=search.get("max_iters"),
        oracle_samples=oracle.get("samples", 256),
        oracle_horizon=oracle.get("horizon"),
        raw=doc,
    )


def load(path: str | Path) -> ProblemSpec:
    """Read and validate a problem file.

    Raises:
        SchemaError: unreadable JSON (path ``""``) or a validation failure.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from None
    return from_dict(doc)

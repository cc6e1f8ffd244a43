"""Verdicts and certificates returned by the discrete and continuous checkers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .convexity import ShapeReport


class Status(enum.Enum):
    VERIFIED = "VERIFIED"
    FALSIFIED = "FALSIFIED"
    INCONCLUSIVE = "INCONCLUSIVE"

    @property
    def exit_code(self) -> int:
        return {"VERIFIED": 0, "FALSIFIED": 1, "INCONCLUSIVE": 2}[self.value]


class Exactness(enum.Enum):
    EXACT = "Exact"
    NUMERICAL = "Numerical"


class Mode(enum.Enum):
    GLOBAL = "global"
    RESTRICTED = "restricted"


class WitnessKind(enum.Enum):
    ESCAPE = "escape"  # x in the set, f(x) outside
    RESIDUAL = "residual"  # certificate inequality negative at x
    BOUNDARY = "boundary"  # flow points outward at a boundary point


@dataclass
class Certificate:
    """``kind`` is ``"H"``, ``"beta"`` or ``"alpha"``."""

    kind: str
    value: Any
    mode: Mode = Mode.GLOBAL

    def __post_init__(self):
        if self.kind not in ("H", "beta", "alpha"):
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.kind == "H":
            self.value = np.atleast_2d(np.asarray(self.value, dtype=float))
        else:
            self.value = float(self.value)

    def to_dict(self) -> dict:
        v = self.value.tolist() if self.kind == "H" else self.value
        return {"kind": self.kind, "value": v, "mode": self.mode.value}


@dataclass
class CheckVerdict:
    status: Status
    exactness: Exactness = Exactness.NUMERICAL
    certificate: Certificate | None = None
    counterexample: np.ndarray | None = None
    witness_kind: WitnessKind | None = None
    residual_minima: list[float] = field(default_factory=list)
    minimizers: list[np.ndarray] = field(default_factory=list)
    hypothesis_report: list[ShapeReport] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    domain_flag: bool = False
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status is Status.FALSIFIED and self.counterexample is None:
            raise ValueError("a FALSIFIED verdict needs a counterexample")

    @property
    def verified(self) -> bool:
        return self.status is Status.VERIFIED

    @property
    def falsified(self) -> bool:
        return self.status is Status.FALSIFIED

    def to_dict(self) -> dict:
        def vec(v):
            return None if v is None else [float(x) for x in np.ravel(v)]

        return {
            "status": self.status.value,
            "exactness": self.exactness.value,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "counterexample": vec(self.counterexample),
            "witness_kind": None if self.witness_kind is None else self.witness_kind.value,
            "residual_minima": [float(v) for v in self.residual_minima],
            "minimizers": [vec(p) for p in self.minimizers],
            "hypothesis_report": [r.to_dict() for r in self.hypothesis_report],
            "domain_flag": self.domain_flag,
            "notes": list(self.notes),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj

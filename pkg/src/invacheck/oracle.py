"""Brute-force escape search: iterate maps, integrate flows, watch containment.

Containment during propagation uses the escape tolerance (1e-6), scaled by
the magnitude of the state so that rounding on far-away iterates is not
mistaken for an escape. A non-finite state (NaN from a domain violation or
floating overflow) stops the trajectory and is reported as a domain escape,
which is not counted as leaving the set.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRegion, NoBoundaryFound, UsageError
from .expr import VectorField
from .sets import Ellipsoid, Polyhedron, Region, SublevelSet, contains, sample, violation
from .tolerances import TOL


class SystemKind(enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class System:
    kind: SystemKind
    field: VectorField

    @property
    def dim(self) -> int:
        return self.field.dim

    @classmethod
    def discrete(cls, f: VectorField) -> "System":
        return cls(SystemKind.DISCRETE, f)

    @classmethod
    def continuous(cls, f: VectorField) -> "System":
        return cls(SystemKind.CONTINUOUS, f)


@dataclass
class EscapeReport:
    escaped: bool
    start: np.ndarray
    index: int | None = None  # discrete step of the first escape
    time: float | None = None  # continuous time of the first escape
    escape_point: np.ndarray | None = None
    margin: float | None = None
    domain_escape: bool = False
    final_point: np.ndarray | None = None
    steps: int = 0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def vec(v):
            return None if v is None else [float(x) for x in v]

        return {
            "escaped": self.escaped,
            "start": vec(self.start),
            "index": self.index,
            "time": self.time,
            "escape_point": vec(self.escape_point),
            "margin": self.margin,
            "domain_escape": self.domain_escape,
            "final_point": vec(self.final_point),
            "steps": self.steps,
            "notes": list(self.notes),
        }


def _magnitude(s, X: np.ndarray) -> np.ndarray:
    if isinstance(s, Polyhedron):
        return (np.abs(s.G) @ np.abs(X)).max(axis=0)
    if isinstance(s, Ellipsoid):
        return np.einsum("ik,ij,jk->k", X, s.Q, X)
    return np.einsum("ik,ik->k", X, X)


def _escape_tol(s, X: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        mag = _magnitude(s, X)
    return TOL.escape * np.maximum(1.0, mag)


def _outside(s, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(escaped mask, non-finite mask, violation) per column."""
    finite = np.all(np.isfinite(X), axis=0)
    v = np.full(X.shape[1], np.nan)
    if finite.any():
        with np.errstate(all="ignore"):
            v[finite] = violation(s, X[:, finite])
    bad = ~finite | np.isnan(v)
    with np.errstate(invalid="ignore"):
        out = ~bad & (v > _escape_tol(s, np.where(finite, X, 0.0)))
    return out, bad, v


def _require_start(s, x0: np.ndarray) -> None:
    if s is not None and not contains(s, x0):
        raise UsageError("start point is not in the set")


def iterate_discrete(f: VectorField, x0, steps: int, s=None) -> EscapeReport:
    """Iterate ``x <- f(x)`` up to ``steps`` times, stopping at the first escape.

    Raises:
        UsageError: ``x0`` is not in ``s``.
    """
    x = np.asarray(x0, dtype=float).copy()
    _require_start(s, x)
    F = f.compiled()
    for k in range(1, steps + 1):
        with np.errstate(all="ignore"):
            x = F(x[:, None])[:, 0]
        if s is None:
            if not np.all(np.isfinite(x)):
                return EscapeReport(False, np.asarray(x0, float), index=k, domain_escape=True, final_point=x, steps=k)
            continue
        out, bad, v = _outside(s, x[:, None])
        if bad[0]:
            return EscapeReport(
                False, np.asarray(x0, float), index=k, escape_point=x, domain_escape=True,
                final_point=x, steps=k, notes=["state became non-finite"],
            )
        if out[0]:
            return EscapeReport(True, np.asarray(x0, float), index=k, escape_point=x, margin=float(v[0]), final_point=x, steps=k)
    return EscapeReport(False, np.asarray(x0, float), final_point=x, steps=steps)


def _rk4_step(F, X: np.ndarray, h: float) -> np.ndarray:
    k1 = F(X)
    k2 = F(X + 0.5 * h * k1)
    k3 = F(X + 0.5 * h * k2)
    k4 = F(X + h * k3)
    return X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_rk4(f_c: VectorField, x0, T: float, h: float = 0.01, s=None) -> EscapeReport:
    """Classical fixed-step RK4 from ``x0`` up to time ``T``.

    Raises:
        UsageError: ``h <= 0``, ``T < h`` or ``x0`` not in ``s``.
    """
    if not h > 0 or T < h:
        raise UsageError("need h > 0 and T >= h")
    x = np.asarray(x0, dtype=float).copy()
    _require_start(s, x)
    F = f_c.compiled()
    n = int(round(T / h))
    for k in range(1, n + 1):
        with np.errstate(all="ignore"):
            x = _rk4_step(F, x[:, None], h)[:, 0]
        t = k * h
        if s is None:
            if not np.all(np.isfinite(x)):
                return EscapeReport(False, np.asarray(x0, float), time=t, domain_escape=True, final_point=x, steps=k)
            continue
        out, bad, v = _outside(s, x[:, None])
        if bad[0]:
            return EscapeReport(
                False, np.asarray(x0, float), time=t, escape_point=x, domain_escape=True,
                final_point=x, steps=k, notes=["state became non-finite"],
            )
        if out[0]:
            return EscapeReport(True, np.asarray(x0, float), time=t, escape_point=x, margin=float(v[0]), final_point=x, steps=k)
    return EscapeReport(False, np.asarray(x0, float), final_point=x, steps=n)


def _first_escape_index(s, system: System, X: np.ndarray, horizon: float, h: float) -> np.ndarray:
    """Step index of the first escape per column (0 when none)."""
    F = system.field.compiled()
    k = X.shape[1]
    first = np.zeros(k, dtype=int)
    alive = np.ones(k, dtype=bool)
    if system.kind is SystemKind.DISCRETE:
        steps = int(horizon)
    else:
        steps = int(round(horizon / h))
    for step in range(1, steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        with np.errstate(all="ignore"):
            if system.kind is SystemKind.DISCRETE:
                Y = F(X[:, idx])
            else:
                Y = _rk4_step(F, X[:, idx], h)
        X[:, idx] = Y
        out, bad, _ = _outside(s, Y)
        first[idx[out]] = step
        alive[idx[out | bad]] = False
    return first


def start_points(s, count: int, seed: int = 0, box=(-100.0, 100.0), shrink: float = 1e-3) -> np.ndarray:
    """Half interior samples, half boundary samples pulled slightly inward."""
    n_int = count - count // 2
    pts = [sample(s, Region.INTERIOR, n_int, seed, box)]
    n_bd = count - n_int
    if n_bd:
        try:
            B = sample(s, Region.BOUNDARY, n_bd, seed + 1, box)
            c = pts[0].mean(axis=1, keepdims=True)
            if isinstance(s, Ellipsoid):
                c = np.zeros_like(c)
            pts.append(c + (1.0 - shrink) * (B - c))
        except (NoBoundaryFound, EmptyRegion):
            pts.append(sample(s, Region.INTERIOR, n_bd, seed + 1, box))
    X = np.hstack(pts)
    return X[:, [contains(s, X[:, j]) for j in range(X.shape[1])]]


def falsify(
    s,
    system: System,
    n_samples: int = 1000,
    horizon: float | None = None,
    seed: int = 0,
    box=(-100.0, 100.0),
    h: float = 0.01,
) -> EscapeReport | None:
    """Search for a trajectory leaving ``s``; return the first escape or ``None``.

    ``horizon`` is a step count for discrete systems (default 50) and a time
    for continuous ones (default 10). Among escaping starts the one with the
    lowest sample index is re-propagated and reported.
    """
    if horizon is None:
        horizon = 50 if system.kind is SystemKind.DISCRETE else 10.0
    X = start_points(s, n_samples, seed, box)
    if X.shape[1] == 0:
        return None
    first = _first_escape_index(s, system, X.copy(), horizon, h)
    hits = np.flatnonzero(first > 0)
    if hits.size == 0:
        return None
    x0 = X[:, hits[0]]
    if system.kind is SystemKind.DISCRETE:
        rep = iterate_discrete(system.field, x0, int(horizon), s)
    else:
        rep = integrate_rk4(system.field, x0, float(horizon), h, s)
    rep.notes.append(f"sample {int(hits[0])} of {X.shape[1]}; {hits.size} escaping starts")
    return rep


def confirm_escape(s, system: System, x, horizon: float | None = None, h: float = 0.01) -> EscapeReport:
    """Propagate from a single point (typically a checker witness) and report."""
    x = np.asarray(x, dtype=float)
    if system.kind is SystemKind.DISCRETE:
        return iterate_discrete(system.field, x, int(horizon or 1), s)
    return integrate_rk4(system.field, x, float(horizon or 1.0), h, s)

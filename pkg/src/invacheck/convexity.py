"""Convexity and concavity probes via the symbolic Hessian.

A constant Hessian is decided exactly by one eigenvalue test. Otherwise the
Hessian is evaluated on a scrambled Halton design over a box and the verdict
is labelled as sampled: it corroborates a global hypothesis, never proves it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import DomainError
from .expr import Const, Expr, compile_exprs, derivatives
from .linalg import sym_eigen
from .tolerances import TOL


class Shape(enum.Enum):
    CONVEX = "Convex"
    CONCAVE = "Concave"
    AFFINE = "Affine"
    INDEFINITE = "Indefinite"


class Certainty(enum.Enum):
    CERTIFIED = "Certified"
    SAMPLED = "Sampled"


@dataclass
class ShapeReport:
    verdict: Shape
    certainty: Certainty
    # (point, eigenvalue) where convexity resp. concavity fails
    convexity_witness: tuple[np.ndarray, float] | None = None
    concavity_witness: tuple[np.ndarray, float] | None = None
    samples: int = 0
    invalid: int = 0
    label: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def convex(self) -> bool:
        return self.verdict in (Shape.CONVEX, Shape.AFFINE)

    @property
    def concave(self) -> bool:
        return self.verdict in (Shape.CONCAVE, Shape.AFFINE)

    @property
    def certified(self) -> bool:
        return self.certainty is Certainty.CERTIFIED

    @property
    def witness(self) -> tuple[np.ndarray, float] | None:
        return self.convexity_witness or self.concavity_witness

    def to_dict(self) -> dict:
        def wit(w):
            return None if w is None else {"point": [float(v) for v in w[0]], "eigenvalue": float(w[1])}

        return {
            "label": self.label,
            "verdict": self.verdict.value,
            "certainty": self.certainty.value,
            "samples": self.samples,
            "invalid_samples": self.invalid,
            "convexity_witness": wit(self.convexity_witness),
            "concavity_witness": wit(self.concavity_witness),
            "notes": list(self.notes),
        }


def _classify(lo: float, hi: float, tol: float) -> Shape:
    convex = lo >= -tol
    concave = hi <= tol
    if convex and concave:
        return Shape.AFFINE
    if convex:
        return Shape.CONVEX
    if concave:
        return Shape.CONCAVE
    return Shape.INDEFINITE


def hessian_is_constant(e: Expr, dim: int) -> bool:
    _, hess = derivatives(e, dim)
    return all(isinstance(h, Const) for row in hess for h in row)


def probe(
    e: Expr,
    dim: int,
    box: tuple[float, float] = (-100.0, 100.0),
    samples: int = 512,
    seed: int = 0,
    label: str = "",
) -> ShapeReport:
    """Classify ``e`` as convex, concave, affine or indefinite.

    Raises:
        DomainError: every sample point evaluates to NaN.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lo, hi = box
    if not lo < hi:
        raise ValueError("probe box is empty")
    _, hess = derivatives(e, dim)
    center = np.full(dim, 0.5 * (lo + hi))
    tol = TOL.hessian_sign

    if all(isinstance(h, Const) for row in hess for h in row):
        H = np.array([[h.value for h in row] for row in hess])
        w, _ = sym_eigen(H)
        t = tol * max(1.0, float(np.abs(H).max()))
        verdict = _classify(w[-1], w[0], t)
        return ShapeReport(
            verdict,
            Certainty.CERTIFIED,
            (center, float(w[-1])) if w[-1] < -t else None,
            (center, float(w[0])) if w[0] > t else None,
            samples=1,
            label=label,
        )

    entries = [hess[i][j] for i in range(dim) for j in range(i, dim)]
    f = compile_exprs(entries)
    pts = qmc.Halton(dim, scramble=True, seed=seed).random(samples).T * (hi - lo) + lo
    vals = f(pts)
    valid = np.all(np.isfinite(vals), axis=0)
    if not valid.any():
        raise DomainError(f"Hessian of {label or 'expression'} is NaN at every sample")

    worst_lo = (None, np.inf)
    worst_hi = (None, -np.inf)
    lo_ok = hi_ok = True
    for k in np.flatnonzero(valid):
        H = np.empty((dim, dim))
        idx = 0
        for i in range(dim):
            for j in range(i, dim):
                H[i, j] = H[j, i] = vals[idx, k]
                idx += 1
        w, _ = sym_eigen(H)
        t = tol * max(1.0, float(np.abs(H).max()))
        if w[-1] < worst_lo[1]:
            worst_lo = (pts[:, k].copy(), float(w[-1]))
        if w[0] > worst_hi[1]:
            worst_hi = (pts[:, k].copy(), float(w[0]))
        lo_ok &= w[-1] >= -t
        hi_ok &= w[0] <= t

    if lo_ok and hi_ok:
        verdict = Shape.AFFINE
    elif lo_ok:
        verdict = Shape.CONVEX
    elif hi_ok:
        verdict = Shape.CONCAVE
    else:
        verdict = Shape.INDEFINITE
    n_invalid = int((~valid).sum())
    notes = []
    if n_invalid:
        notes.append(f"{n_invalid} of {samples} Hessian samples were NaN and skipped")
    return ShapeReport(
        verdict,
        Certainty.SAMPLED,
        None if lo_ok else worst_lo,
        None if hi_ok else worst_hi,
        samples=samples,
        invalid=n_invalid,
        label=label,
        notes=notes,
    )


def hessian_at(e: Expr, dim: int, point) -> np.ndarray:
    """Numeric Hessian of ``e`` at ``point`` (used to re-check witnesses)."""
    _, hess = derivatives(e, dim)
    f = compile_exprs([h for row in hess for h in row])
    v = f(np.asarray(point, dtype=float)[:, None])[:, 0]
    return v.reshape(dim, dim)

"""Boundary (tangent-cone) conditions for continuous systems ``x' = f(x)``.

A closed set is invariant when the field never points outward on its
boundary. Each check below maximises the outward component of the field
over the boundary (per face for polyhedra) and compares the maximum with
``TOL.residual``. A positive maximum above ``TOL.strict_escape`` is
confirmed dynamically by an RK4 run from the maximiser; smaller positive
values are reported as tangential and left unconfirmed.

Uniqueness of solutions is assumed and not checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convexity import ShapeReport
from .errors import EmptyRegion, NoBoundaryFound, OriginNotInterior
from .expr import Expr, VectorField, compile_expr, dot, evaluate, gradient, linear_form, mul, substitute_affine, total
from .optimize import OptConfig, OptResult, maximize_in_polytope, maximize_on_level_set
from .oracle import integrate_rk4
from .sets import Ellipsoid, Polyhedron, SublevelSet, _ray_boundary, chebyshev_center, sample, sublevel_interior_point
from .tolerances import TOL
from .verdict import CheckVerdict, Status, WitnessKind


@dataclass
class BoundaryReport:
    """Maximum of the outward field component over one face or the whole boundary."""

    face: int | None
    max_value: float
    maximizer: np.ndarray | None
    samples: int
    status: Status
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "face": self.face,
            "max_value": self.max_value,
            "maximizer": None if self.maximizer is None else [float(v) for v in self.maximizer],
            "samples": self.samples,
            "status": self.status.value,
            "notes": list(self.notes),
        }


def _status(value: float) -> Status:
    return Status.FALSIFIED if value > TOL.residual else Status.VERIFIED


def _confirm(verdict: CheckVerdict, s, f_c: VectorField, x: np.ndarray, value: float) -> None:
    if value <= TOL.strict_escape:
        verdict.notes.append(
            f"boundary-tangential: maximum {value:.3g} is below {TOL.strict_escape:g}, trajectory confirmation skipped"
        )
        verdict.details["trajectory_confirmed"] = None
        return
    rep = integrate_rk4(f_c, x, 1.0, 0.01, s)
    verdict.details["trajectory_confirmed"] = rep.escaped
    if rep.escaped:
        verdict.details["escape_time"] = rep.time
        verdict.notes.append(f"RK4 trajectory from the witness leaves the set at t = {rep.time:.2f}")
    else:
        verdict.notes.append("RK4 trajectory from the witness did not leave the set within t = 1")


def _assemble(reports: list[BoundaryReport], s, f_c: VectorField, config: OptConfig, hyps=(), notes=()) -> CheckVerdict:
    live = [r for r in reports if r.maximizer is not None]
    verdict = CheckVerdict(
        Status.VERIFIED,
        hypothesis_report=list(hyps),
        notes=list(notes),
        details={
            "boundary": [r.to_dict() for r in reports],
            "maxima": [r.max_value for r in reports],
            "effort": {"starts": config.starts, "max_iters": config.max_iters, "box": list(config.box), "seed": config.seed},
        },
    )
    verdict.minimizers = [r.maximizer for r in live]
    if not live:
        verdict.notes.append("no nonempty boundary piece: invariance holds vacuously")
        return verdict
    worst = max(live, key=lambda r: r.max_value)
    verdict.details["max_value"] = worst.max_value
    if worst.status is Status.FALSIFIED:
        verdict.status = Status.FALSIFIED
        verdict.counterexample = worst.maximizer
        verdict.witness_kind = WitnessKind.BOUNDARY
        if worst.face is not None:
            verdict.details["violating_face"] = worst.face
        _confirm(verdict, s, f_c, worst.maximizer, worst.max_value)
    else:
        verdict.notes.append("numerically verified on the boundary at the recorded effort")
    return verdict


# ---------------------------------------------------------------------------


def _face_frame(P: Polyhedron, i: int) -> tuple[np.ndarray, np.ndarray]:
    """``(x0, N)`` with the face hyperplane ``{x0 + N z}`` and orthonormal ``N``."""
    g = P.G[i]
    x0 = g * P.b[i] / (g @ g)
    _, _, Vt = np.linalg.svd(g[None, :])
    return x0, Vt[1:].T


def face_objective(P: Polyhedron, f_c: VectorField, i: int) -> Expr:
    return dot(P.G[i], f_c.components)


def check_polyhedron_continuous(P: Polyhedron, f_c: VectorField, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Maximise ``g_i^T f(x)`` over every face ``{x in P : g_i^T x = b_i}``.

    Each face is parameterised by an orthonormal basis of its hyperplane so
    that the search runs in ``n - 1`` free coordinates, with the remaining
    rows of ``P`` as linear constraints; hit-and-run face samples seed the
    search. Empty faces are skipped.

    Raises:
        OriginNotInterior: ``b`` is not componentwise positive.
    """
    if not np.all(P.b > 0):
        raise OriginNotInterior("the continuous polyhedral check needs b > 0 (origin in the interior)")
    n, m = P.dim, P.rows
    reports = []
    notes = []
    for i in range(m):
        try:
            chebyshev_center(P, i, config.box)
        except EmptyRegion:
            notes.append(f"face {i + 1} is empty and was skipped")
            reports.append(BoundaryReport(i, float("-inf"), None, 0, Status.VERIFIED, ["empty face"]))
            continue
        obj = face_objective(P, f_c, i)
        x0, N = _face_frame(P, i)
        keep = np.arange(m) != i
        if N.shape[1] == 0:
            x = x0
            val = evaluate(obj, list(x))
            reports.append(BoundaryReport(i, val, x, 1, _status(val)))
            continue
        z_obj = substitute_affine(obj, N, x0)
        A = P.G[keep] @ N
        b = P.b[keep] - P.G[keep] @ x0
        seeds = sample(P, i, max(8, config.starts // 4), config.seed + i, config.box)
        res = maximize_in_polytope(z_obj, A, b, N.shape[1], config, N.T @ (seeds - x0[:, None]))
        x = x0 + N @ res.best_point
        val = evaluate(obj, [float(v) for v in x])
        reports.append(BoundaryReport(i, val, x, res.starts_used, _status(val)))
    return _assemble(reports, P, f_c, config, notes=notes)


def check_ellipsoid_continuous(E: Ellipsoid, f_c: VectorField, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Maximise ``f(x)^T Q x`` over ``x^T Q x = 1`` (exact sphere parameterisation)."""
    Qx = [linear_form(E.Q[j]) for j in range(E.dim)]
    obj = total(mul(fj, qj) for fj, qj in zip(f_c.components, Qx))
    res = maximize_on_level_set(obj, E, E.dim, config)
    x = res.best_point
    x = x / np.sqrt(x @ E.Q @ x)
    val = evaluate(obj, [float(v) for v in x])
    rep = BoundaryReport(None, val, x, res.starts_used, _status(val), list(res.notes))
    return _assemble([rep], E, f_c, config)


def boundary_points(S: SublevelSet, count: int, seed: int, box, center: np.ndarray) -> np.ndarray:
    """Up to ``count`` points on ``g = 0`` found by bisection along random rays.

    Raises:
        NoBoundaryFound: no ray reached the boundary.
    """
    rng = np.random.default_rng(seed)
    g = compile_expr(S.g)
    pts = []
    for _ in range(4 * count):
        d = rng.standard_normal(S.dim)
        pt = _ray_boundary(g, center, d / np.linalg.norm(d), box)
        if pt is not None:
            pts.append(pt)
            if len(pts) == count:
                break
    if not pts:
        raise NoBoundaryFound("no ray from the interior point reached g = 0 inside the search box")
    return np.array(pts).T


def check_sublevel_continuous(S: SublevelSet, f_c: VectorField, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Maximise ``grad g(x)^T f(x)`` over ``g(x) = 0``.

    Convexity of ``g`` is probed; a VERIFIED verdict is capped at
    INCONCLUSIVE when the probe refutes it, since the boundary condition
    characterises invariance only for convex sets.
    """
    from .discrete import _probe

    n = S.dim
    obj = total(mul(gj, fj) for gj, fj in zip(gradient(S.g, n), f_c.components))
    hyp: ShapeReport = _probe(S.g, n, config, "g(x) convex")
    try:
        center = sublevel_interior_point(S, config.box)
        B = boundary_points(S, config.starts, config.seed, config.box, center)
    except (EmptyRegion, NoBoundaryFound) as exc:
        v = CheckVerdict(Status.VERIFIED, hypothesis_report=[hyp], notes=[f"{exc}; invariance holds vacuously in the search box"])
        return v
    res = maximize_on_level_set(obj, S.g, n, config, center=center, boundary_samples=B)
    x = res.best_point
    val = evaluate(obj, [float(v) for v in x])
    rep = BoundaryReport(None, val, x, res.starts_used, _status(val), list(res.notes))
    verdict = _assemble([rep], S, f_c, config, hyps=[hyp])
    if verdict.status is Status.VERIFIED and not hyp.convex:
        verdict.status = Status.INCONCLUSIVE
        verdict.notes.append("boundary condition holds but g is not convex, so the condition is not sufficient")
    return verdict

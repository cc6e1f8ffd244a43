"""Invariance conditions for discrete systems ``x+ = f(x)``.

Each condition asks for a multiplier (matrix ``H``, scalar ``beta`` or
``alpha``) making a residual nonnegative. In ``GLOBAL`` mode the residual
must hold on all of R^n (the search box stands in for R^n) and the theorem
needs convexity hypotheses, which are probed and attached to the verdict.
In ``RESTRICTED`` mode the residual only has to hold on the set itself and
no hypothesis is needed.

Verdict rules shared by every checker here:

* a residual minimum below ``-TOL.residual`` is ``FALSIFIED``, with the
  minimiser re-evaluated by the recursive evaluator before it is reported;
* otherwise ``VERIFIED``, except that a ``GLOBAL`` verdict is capped at
  ``INCONCLUSIVE`` when the required convexity hypothesis is refuted by the
  probe;
* only the linear fast paths (LP and eigenvalues) are labelled ``Exact``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .convexity import Shape, ShapeReport, hessian_is_constant, probe
from .errors import (
    AllSamplesInvalid,
    DimensionError,
    DomainError,
    EmptyRegion,
    NegativeEntries,
    NegativeMultiplier,
)
from .expr import (
    Expr,
    VectorField,
    add,
    compile_expr,
    compile_exprs,
    const,
    derivatives,
    dot,
    evaluate,
    linear_form,
    mul,
    neg,
    quadratic_form,
    sub,
)
from .linalg import LpStatus, is_neg_semidefinite, linprog, sym_eigen
from .optimize import (
    OptConfig,
    OptResult,
    OptStatus,
    Objective,
    _descend,
    box_projection,
    halton_points,
    maximin_scalar,
    minimize_in_ellipsoid,
    minimize_in_polytope,
    minimize_in_sublevel,
    minimize_multistart,
)
from .sets import (
    Ellipsoid,
    Polyhedron,
    Region,
    SublevelSet,
    contains,
    interior_point,
    sample,
    sublevel_interior_point,
)
from .tolerances import TOL
from .verdict import Certificate, CheckVerdict, Exactness, Mode, Status, WitnessKind

ALPHA_CAP = 1e3
BETA_CAP = 1e3


def _effort(config: OptConfig) -> dict:
    return {"starts": config.starts, "max_iters": config.max_iters, "box": list(config.box), "seed": config.seed}


def _mode(mode) -> Mode:
    return mode if isinstance(mode, Mode) else Mode(mode)


def _check_field(f: VectorField, dim: int) -> None:
    if f.dim != dim:
        raise DimensionError(f"map has dimension {f.dim}, set has dimension {dim}")


def _probe(e: Expr, dim: int, config: OptConfig, label: str) -> ShapeReport:
    try:
        return probe(e, dim, config.box, seed=config.seed, label=label)
    except DomainError as exc:
        from .convexity import Certainty

        return ShapeReport(Shape.INDEFINITE, Certainty.SAMPLED, label=label, notes=[str(exc)])


def _domain_note(res: OptResult, verdict: CheckVerdict) -> None:
    frac = res.history.get("invalid_fraction", 0.0)
    if frac > 0.5:
        verdict.domain_flag = True
        verdict.notes.append(
            f"DomainFlag: {100 * frac:.1f}% of sampled points are outside the map's domain (NaN) and were skipped"
        )


def _residual_value(e: Expr, x: np.ndarray) -> float:
    return evaluate(e, [float(v) for v in x])


def _finish(
    residuals: list[Expr],
    results: list[OptResult],
    mode: Mode,
    hyps: list[ShapeReport],
    hyp_ok: bool,
    certificate: Certificate,
    config: OptConfig,
    s,
    f: VectorField,
    notes: list[str] | None = None,
) -> CheckVerdict:
    """Turn per-row minimisation results into a verdict."""
    minima = [r.best_value for r in results]
    points = [r.best_point for r in results]
    verdict = CheckVerdict(
        Status.INCONCLUSIVE,
        certificate=certificate,
        residual_minima=minima,
        minimizers=points,
        hypothesis_report=hyps,
        notes=list(notes or []),
        details={"effort": _effort(config), "mode": mode.value},
    )
    for r in results:
        _domain_note(r, verdict)
        if verdict.domain_flag:
            break
    worst = int(np.argmin(minima))
    if minima[worst] < -TOL.residual:
        x = points[worst]
        recheck = _residual_value(residuals[worst], x)
        if not recheck < -TOL.residual:
            verdict.notes.append(f"negative residual did not survive re-evaluation ({recheck:.3g})")
            return verdict
        verdict.status = Status.FALSIFIED
        verdict.counterexample = x
        verdict.witness_kind = WitnessKind.RESIDUAL
        fx = f(x)
        if contains(s, x) and not contains(s, fx):
            verdict.witness_kind = WitnessKind.ESCAPE
        verdict.details["violating_row"] = worst
        verdict.details["witness_residual"] = recheck
        return verdict
    if any(r.status is OptStatus.ALL_SAMPLES_INVALID for r in results):
        verdict.notes.append("optimizer found no valid sample")
        return verdict
    verdict.status = Status.VERIFIED
    if mode is Mode.GLOBAL and not hyp_ok:
        verdict.status = Status.INCONCLUSIVE
        verdict.notes.append(
            "residual is nonnegative on the search box but the convexity hypothesis fails, "
            "so the global theorem does not apply; try restricted mode"
        )
    elif mode is Mode.GLOBAL:
        if any(not h.certified for h in hyps):
            verdict.notes.append("convexity hypothesis corroborated by sampling only")
        verdict.notes.append("numerically verified on the search box at the recorded effort")
    else:
        verdict.notes.append("numerically verified on the set at the recorded effort")
    return verdict


# ---------------------------------------------------------------------------
# polyhedra


def polyhedral_residual(P: Polyhedron, f: VectorField, h: np.ndarray, i: int) -> Expr:
    """``h^T G x - G_i^T f(x) - h^T b + b_i``."""
    G, b = P.G, P.b
    return sub(linear_form(h @ G, float(b[i] - h @ b)), dot(G[i], f.components))


def _escape_terms_polyhedron(P: Polyhedron, f: VectorField) -> list[Expr]:
    return [polyhedral_residual(P, f, np.zeros(P.rows), i) for i in range(P.rows)]


def _polytope_starts(P: Polyhedron, config: OptConfig, count: int = 16) -> np.ndarray | None:
    try:
        return sample(P, Region.INTERIOR, count, config.seed, config.box)
    except EmptyRegion:
        return None


def _minimize_rows(P: Polyhedron, residuals: list[Expr], mode: Mode, config: OptConfig) -> list[OptResult]:
    n = P.dim
    if mode is Mode.GLOBAL:
        return [minimize_multistart(r, n, config) for r in residuals]
    extra = _polytope_starts(P, config)
    return [minimize_in_polytope(r, P.G, P.b, n, config, extra) for r in residuals]


def _polyhedral_hypotheses(P: Polyhedron, f: VectorField, config: OptConfig) -> tuple[list[ShapeReport], bool]:
    hyps = []
    for i in range(P.rows):
        e = sub(const(float(P.b[i])), dot(P.G[i], f.components))
        hyps.append(_probe(e, P.dim, config, f"b_{i + 1} - G_{i + 1}^T f(x) convex"))
    return hyps, all(h.convex for h in hyps)


def verify_polyhedral_H(P: Polyhedron, f: VectorField, H, mode=Mode.GLOBAL, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Check a nonnegative ``H`` against every row residual of the polyhedral condition.

    Raises:
        NegativeEntries: ``H`` has an entry below ``-1e-12``.
        DimensionError: shapes disagree.
    """
    mode = _mode(mode)
    _check_field(f, P.dim)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape != (P.rows, P.rows):
        raise DimensionError(f"H must be {P.rows}x{P.rows}, got {H.shape}")
    if (H < -TOL.certificate_sign).any():
        raise NegativeEntries("H must be entrywise nonnegative")
    H = np.maximum(H, 0.0)
    residuals = [polyhedral_residual(P, f, H[i], i) for i in range(P.rows)]
    hyps, ok = _polyhedral_hypotheses(P, f, config) if mode is Mode.GLOBAL else ([], True)
    results = _minimize_rows(P, residuals, mode, config)
    return _finish(residuals, results, mode, hyps, ok, Certificate("H", H, mode), config, P, f)


def _escape_check_polyhedron(P: Polyhedron, f: VectorField, config: OptConfig) -> tuple[list[Expr], list[OptResult]]:
    terms = _escape_terms_polyhedron(P, f)
    return terms, _minimize_rows(P, terms, Mode.RESTRICTED, config)


def _escape_verdict(terms, results, s, f, config, kind: str, mode: Mode) -> CheckVerdict | None:
    """FALSIFIED when some ``x`` in the set maps outside; ``None`` otherwise."""
    for i, (t, r) in enumerate(zip(terms, results)):
        if r.best_value < -TOL.residual:
            x = r.best_point
            if contains(s, x) and not contains(s, f(x)) and _residual_value(t, x) < -TOL.residual:
                v = CheckVerdict(
                    Status.FALSIFIED,
                    counterexample=x,
                    witness_kind=WitnessKind.ESCAPE,
                    residual_minima=[q.best_value for q in results],
                    minimizers=[q.best_point for q in results],
                    notes=[f"one step of the map leaves the set (row {i + 1}); no {kind} can exist"],
                    details={"effort": _effort(config), "mode": mode.value, "violating_row": i},
                )
                return v
    return None


def _box_corners(n: int, box) -> np.ndarray:
    if n > 10:
        return np.zeros((n, 0))
    lo, hi = box
    return np.array(list(itertools.product([lo, hi], repeat=n)), dtype=float).T


def _row_lp(P: Polyhedron, fx: np.ndarray, X: np.ndarray, i: int, cap: float) -> tuple[np.ndarray, float] | None:
    """Maximise the worst normalised slack of row ``i`` over the sample set.

    Variables ``(h, s)``; for each sample ``x_j`` the constraint
    ``h^T (G x_j - b) - s w_j >= G_i^T f(x_j) - b_i`` with ``w_j`` a row scale.
    """
    G, b = P.G, P.b
    m = P.rows
    D = G @ X - b[:, None]  # (m, k)
    rhs = G[i] @ fx - b[i]
    w = 1.0 + np.abs(rhs) + np.abs(D).sum(axis=0)
    # -h^T D_j + s w_j <= -rhs_j
    A_ub = np.hstack([-D.T, w[:, None]])
    b_ub = -rhs
    A_cap = np.hstack([np.eye(m), np.zeros((m, 1))])
    s_row = np.zeros((1, m + 1))
    s_row[0, m] = 1.0
    A = np.vstack([A_ub, A_cap, s_row])
    bb = np.concatenate([b_ub, np.full(m, cap), [1.0]])
    c = np.zeros(m + 1)
    c[m] = -1.0
    free = np.zeros(m + 1, dtype=bool)
    free[m] = True
    res = linprog(c, A, bb, free=free)
    if res.status is not LpStatus.OPTIMAL:
        return None
    return np.maximum(res.x[:m], 0.0), float(res.x[m])


def search_polyhedral_H(
    P: Polyhedron,
    f: VectorField,
    mode=Mode.GLOBAL,
    config: OptConfig = OptConfig(),
    max_rounds: int = 50,
    cap: float = 1e4,
) -> CheckVerdict:
    """Search for ``H >= 0`` satisfying the polyhedral condition.

    First every row is checked for an escaping point (``x`` in ``P`` with
    ``G_i^T f(x) > b_i``); such a point rules out any certificate. In
    restricted mode ``H = 0`` is then optimal, because ``H (G x - b) <= 0``
    on ``P``. In global mode each row runs a cutting-plane loop: an LP picks
    ``H_i`` maximising the worst slack over a finite sample set, multistart
    minimisation looks for a violating point, and violators join the sample
    set until none is found or ``max_rounds`` is hit.
    """
    mode = _mode(mode)
    _check_field(f, P.dim)
    n, m = P.dim, P.rows
    terms, esc = _escape_check_polyhedron(P, f, config)
    falsified = _escape_verdict(terms, esc, P, f, config, "H", mode)
    if falsified is not None:
        return falsified
    if mode is Mode.RESTRICTED:
        v = verify_polyhedral_H(P, f, np.zeros((m, m)), mode, config)
        v.notes.append("H = 0 is optimal in restricted mode")
        return v

    F = f.compiled()
    base = [halton_points(n, 8 * (n + m), config.seed, config.box), _box_corners(n, config.box)]
    inner = _polytope_starts(P, config)
    if inner is not None:
        base.append(inner)
    X0 = np.hstack(base)
    fx0 = F(X0)
    keep = np.all(np.isfinite(fx0), axis=0)
    X0, fx0 = X0[:, keep], fx0[:, keep]
    verify_cfg = config.with_(starts=max(16, config.starts // 2))

    H = np.zeros((m, m))
    rounds = []
    for i in range(m):
        X, fx = X0, fx0
        found = False
        for rnd in range(1, max_rounds + 1):
            sol = _row_lp(P, fx, X, i, cap)
            if sol is None:
                break
            h, slack = sol
            r = polyhedral_residual(P, f, h, i)
            res = minimize_multistart(r, n, verify_cfg)
            if res.best_value >= -TOL.residual:
                H[i] = h
                found = True
                rounds.append(rnd)
                break
            # the violator plus a few fresh Halton points keep the LP well spread
            new = [res.best_point[:, None]]
            new.append(halton_points(n, 4, config.seed + 1000 * (i + 1) + rnd, config.box))
            Xn = np.hstack(new)
            fn = F(Xn)
            ok = np.all(np.isfinite(fn), axis=0)
            X = np.hstack([X, Xn[:, ok]])
            fx = np.hstack([fx, fn[:, ok]])
        if not found:
            return CheckVerdict(
                Status.INCONCLUSIVE,
                notes=[
                    f"RoundCapExceeded: no H row {i + 1} found within {max_rounds} rounds",
                    "no escaping point was found either",
                ],
                residual_minima=[q.best_value for q in esc],
                details={"effort": _effort(config), "mode": mode.value, "row": i},
            )
    v = verify_polyhedral_H(P, f, H, mode, config)
    v.details["rounds"] = rounds
    v.notes.append(f"H found by cutting planes in rounds {rounds}")
    return v


def linear_polyhedral_check(P: Polyhedron, A) -> CheckVerdict:
    """Exact LP test for invariance of ``P`` under ``x+ = A x``.

    Row ``i`` solves ``min b^T h`` subject to ``G^T h = A^T G_i``, ``h >= 0``;
    invariance holds iff every optimum is at most ``b_i``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n, m = P.dim, P.rows
    if A.shape != (n, n):
        raise DimensionError(f"A must be {n}x{n}")
    G, b = P.G, P.b
    H = np.zeros((m, m))
    values: list[float | None] = []
    bad_row = None
    for i in range(m):
        res = linprog(b, A_eq=G.T, b_eq=A.T @ G[i])
        if res.status is LpStatus.OPTIMAL:
            values.append(res.value)
            H[i] = res.x
            if res.value > b[i] + 1e-9 and bad_row is None:
                bad_row = i
        else:
            values.append(None)
            if bad_row is None:
                bad_row = i
    details = {"lp_values": values, "rhs": b.tolist()}
    if bad_row is None:
        return CheckVerdict(
            Status.VERIFIED,
            Exactness.EXACT,
            certificate=Certificate("H", H, Mode.GLOBAL),
            residual_minima=[float(b[i] - values[i]) for i in range(m)],
            notes=["all row LPs optimal with value <= b_i"],
            details=details,
        )
    # escaping point: maximise G_i^T A x over P (inside a box if unbounded)
    i = bad_row
    x = None
    for box in ((-1e3, 1e3), (-1e6, 1e6)):
        lo, hi = box
        Ab = np.vstack([G, np.eye(n), -np.eye(n)])
        bb = np.concatenate([b, np.full(n, hi), np.full(n, -lo)])
        res = linprog(-(A.T @ G[i]), Ab, bb, free=True)
        if res.status is LpStatus.OPTIMAL and -res.value > b[i] + 1e-9:
            x = res.x
            break
    notes = [f"row {i + 1}: " + ("LP infeasible" if values[i] is None else f"LP value {values[i]:.6g} > b_i = {b[i]:.6g}")]
    if x is None:
        x = interior_point(P)
        notes.append("no escaping point found inside the search box")
    details["violating_row"] = i
    return CheckVerdict(
        Status.FALSIFIED,
        Exactness.EXACT,
        counterexample=x,
        witness_kind=WitnessKind.ESCAPE,
        notes=notes,
        details=details,
    )


# ---------------------------------------------------------------------------
# ellipsoids


def ellipsoid_residual(E: Ellipsoid, f: VectorField, beta: float) -> Expr:
    """``beta x^T Q x - f(x)^T Q f(x) - beta + 1``."""
    x = [linear_form(np.eye(E.dim)[j]) for j in range(E.dim)]
    return add(
        sub(mul(const(beta), quadratic_form(E.Q, x)), quadratic_form(E.Q, f.components)),
        const(1.0 - beta),
    )


def _ellipsoid_hypotheses(E: Ellipsoid, f: VectorField, config: OptConfig) -> tuple[list[ShapeReport], bool, list[str]]:
    fq = quadratic_form(E.Q, f.components)
    if hessian_is_constant(fq, E.dim):
        rep = _probe(fq, E.dim, config, "f(x)^T Q f(x) quadratic")
        return [rep], True, ["quadratic clause applies: f^T Q f is quadratic, concavity not required"]
    rep = _probe(fq, E.dim, config, "f(x)^T Q f(x) concave")
    return [rep], rep.concave, []


def beta_upper_bound(E: Ellipsoid, f: VectorField) -> float | None:
    """``1 - f(0)^T Q f(0)``, or ``None`` when ``f(0)`` is undefined."""
    f0 = f(np.zeros(E.dim))
    if not np.all(np.isfinite(f0)):
        return None
    return float(1.0 - f0 @ E.Q @ f0)


def _minimize_ellipsoid(E: Ellipsoid, r: Expr, mode: Mode, config: OptConfig) -> OptResult:
    if mode is Mode.GLOBAL:
        return minimize_multistart(r, E.dim, config)
    return minimize_in_ellipsoid(r, E.to_x(), E.dim, config)


def verify_ellipsoid_beta(E: Ellipsoid, f: VectorField, beta: float, mode=Mode.GLOBAL, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Check ``beta`` in the ellipsoid condition.

    Raises:
        NegativeMultiplier: ``beta < -1e-12``.
    """
    mode = _mode(mode)
    _check_field(f, E.dim)
    if beta < -TOL.certificate_sign:
        raise NegativeMultiplier("beta must be nonnegative")
    beta = max(float(beta), 0.0)
    r = ellipsoid_residual(E, f, beta)
    hyps, ok, notes = _ellipsoid_hypotheses(E, f, config) if mode is Mode.GLOBAL else ([], True, [])
    cert = Certificate("beta", beta, mode)
    if mode is Mode.GLOBAL:
        bound = beta_upper_bound(E, f)
        if bound is not None and beta > bound + 1e-9:
            x0 = np.zeros(E.dim)
            return CheckVerdict(
                Status.FALSIFIED,
                certificate=cert,
                counterexample=x0,
                witness_kind=WitnessKind.RESIDUAL,
                residual_minima=[_residual_value(r, x0)],
                minimizers=[x0],
                hypothesis_report=hyps,
                notes=[f"beta exceeds the bound 1 - f(0)^T Q f(0) = {bound:.6g}; the residual is negative at the origin"],
                details={"effort": _effort(config), "mode": mode.value, "beta_bound": bound},
            )
    res = _minimize_ellipsoid(E, r, mode, config)
    return _finish([r], [res], mode, hyps, ok, cert, config, E, f, notes)


def search_ellipsoid_beta(
    E: Ellipsoid, f: VectorField, mode=Mode.GLOBAL, config: OptConfig = OptConfig(), grid: int = 33, refine: int = 3
) -> CheckVerdict:
    """Maximin search over ``beta`` in ``[0, upper]``.

    ``upper`` is ``1 - f(0)^T Q f(0)`` clamped to ``[0, 1]`` (the origin lies
    in ``E``, so larger values fail at ``x = 0``), or ``BETA_CAP`` when
    ``f(0)`` is undefined. An escaping point is looked for first. In
    restricted mode ``beta = 0`` is optimal since ``x^T Q x - 1 <= 0`` on ``E``.
    """
    mode = _mode(mode)
    _check_field(f, E.dim)
    zero = ellipsoid_residual(E, f, 0.0)
    esc = _minimize_ellipsoid(E, zero, Mode.RESTRICTED, config)
    falsified = _escape_verdict([zero], [esc], E, f, config, "beta", mode)
    if falsified is not None:
        return falsified
    if mode is Mode.RESTRICTED:
        v = verify_ellipsoid_beta(E, f, 0.0, mode, config)
        v.notes.append("beta = 0 is optimal in restricted mode")
        return v
    bound = beta_upper_bound(E, f)
    upper = BETA_CAP if bound is None else min(max(bound, 0.0), 1.0)
    inner_cfg = config.with_(starts=max(16, config.starts // 2))

    def inner(beta: float) -> OptResult:
        try:
            return minimize_multistart(ellipsoid_residual(E, f, beta), E.dim, inner_cfg)
        except AllSamplesInvalid:
            return OptResult(np.zeros(E.dim), -math.inf, OptStatus.ALL_SAMPLES_INVALID, 0)

    beta, best = maximin_scalar(inner, upper, grid, refine)
    if best.best_value < -TOL.residual:
        return CheckVerdict(
            Status.INCONCLUSIVE,
            residual_minima=[best.best_value],
            minimizers=[best.best_point],
            notes=[
                f"best beta = {beta:.6g} leaves residual minimum {best.best_value:.3g} < 0",
                "no escaping point was found; the set may still be invariant (try restricted mode)",
            ],
            details={"effort": _effort(config), "mode": mode.value, "beta": beta, "upper": upper},
        )
    v = verify_ellipsoid_beta(E, f, beta, mode, config)
    v.details.update({"beta": beta, "search_value": best.best_value, "upper": upper})
    return v


def linear_ellipsoid_check(E: Ellipsoid, A) -> CheckVerdict:
    """Exact test ``A^T Q A - Q <= 0`` for ``x+ = A x``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = E.dim
    if A.shape != (n, n):
        raise DimensionError(f"A must be {n}x{n}")
    M = A.T @ E.Q @ A - E.Q
    M = 0.5 * (M + M.T)
    w, V = sym_eigen(M)
    details = {"eigenvalues": w.tolist()}
    if is_neg_semidefinite(M, TOL.neg_semidefinite):
        return CheckVerdict(
            Status.VERIFIED,
            Exactness.EXACT,
            certificate=Certificate("beta", 1.0, Mode.GLOBAL),
            notes=["A^T Q A - Q is negative semidefinite"],
            details=details,
        )
    v = V[:, 0]
    x = v / math.sqrt(float(v @ E.Q @ v))
    return CheckVerdict(
        Status.FALSIFIED,
        Exactness.EXACT,
        counterexample=x,
        witness_kind=WitnessKind.ESCAPE,
        notes=[f"A^T Q A - Q has eigenvalue {w[0]:.6g} > 0; its eigenvector on the boundary maps outside"],
        details=details,
    )


# ---------------------------------------------------------------------------
# convex sublevel sets


def convex_residual(S: SublevelSet, f: VectorField, alpha: float) -> Expr:
    """``alpha g(x) - g(f(x))``."""
    return sub(mul(const(alpha), S.g), f.compose(S.g))


def _convex_hypotheses(S: SublevelSet, f: VectorField, config: OptConfig) -> tuple[list[ShapeReport], bool, list[str]]:
    n = S.dim
    gf = f.compose(S.g)
    hyps = [_probe(S.g, n, config, "g(x) convex")]
    notes = []
    ok = hyps[0].convex
    if hessian_is_constant(S.g, n) and hessian_is_constant(gf, n):
        hyps.append(_probe(gf, n, config, "g(f(x)) quadratic"))
        notes.append("quadratic clause applies: g and g(f) are quadratic, concavity of g(f) not required")
    else:
        rep = _probe(gf, n, config, "g(f(x)) concave")
        hyps.append(rep)
        ok = ok and rep.concave
    try:
        sublevel_interior_point(S, config.box)
    except EmptyRegion:
        notes.append("Slater: no point with g(x) < 0 was found; the theorem's strict feasibility assumption is unconfirmed")
    return hyps, ok, notes


def _minimize_sublevel(S: SublevelSet, r: Expr, mode: Mode, config: OptConfig) -> OptResult:
    if mode is Mode.GLOBAL:
        return minimize_multistart(r, S.dim, config)
    center = None
    try:
        center = sublevel_interior_point(S, config.box)
    except EmptyRegion:
        pass
    return minimize_in_sublevel(r, S.g, S.dim, config, center)


def verify_convex_alpha(S: SublevelSet, f: VectorField, alpha: float, mode=Mode.GLOBAL, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Check ``alpha`` in the sublevel-set condition.

    Raises:
        NegativeMultiplier: ``alpha < -1e-12``.
    """
    mode = _mode(mode)
    _check_field(f, S.dim)
    if alpha < -TOL.certificate_sign:
        raise NegativeMultiplier("alpha must be nonnegative")
    alpha = max(float(alpha), 0.0)
    r = convex_residual(S, f, alpha)
    hyps, ok, notes = _convex_hypotheses(S, f, config) if mode is Mode.GLOBAL else ([], True, [])
    cert = Certificate("alpha", alpha, mode)
    try:
        res = _minimize_sublevel(S, r, mode, config)
    except EmptyRegion:
        return CheckVerdict(
            Status.VERIFIED,
            certificate=cert,
            notes=["the set appears empty in the search box; invariance holds vacuously"],
            details={"effort": _effort(config), "mode": mode.value},
        )
    return _finish([r], [res], mode, hyps, ok, cert, config, S, f, notes)


def search_convex_alpha(
    S: SublevelSet,
    f: VectorField,
    mode=Mode.GLOBAL,
    config: OptConfig = OptConfig(),
    cap: float = ALPHA_CAP,
    grid: int = 33,
    refine: int = 3,
) -> CheckVerdict:
    """Maximin search over ``alpha`` in ``[0, cap]``; escape check first.

    In restricted mode ``alpha = 0`` is optimal since ``g <= 0`` on the set.
    """
    mode = _mode(mode)
    _check_field(f, S.dim)
    zero = convex_residual(S, f, 0.0)
    try:
        esc = _minimize_sublevel(S, zero, Mode.RESTRICTED, config)
    except EmptyRegion:
        return verify_convex_alpha(S, f, 0.0, Mode.RESTRICTED, config)
    falsified = _escape_verdict([zero], [esc], S, f, config, "alpha", mode)
    if falsified is not None:
        return falsified
    if mode is Mode.RESTRICTED:
        v = verify_convex_alpha(S, f, 0.0, mode, config)
        v.notes.append("alpha = 0 is optimal in restricted mode")
        return v
    inner_cfg = config.with_(starts=max(16, config.starts // 2))

    def inner(alpha: float) -> OptResult:
        try:
            return minimize_multistart(convex_residual(S, f, alpha), S.dim, inner_cfg)
        except AllSamplesInvalid:
            return OptResult(np.zeros(S.dim), -math.inf, OptStatus.ALL_SAMPLES_INVALID, 0)

    alpha, best = maximin_scalar(inner, cap, grid, refine, candidates=(1.0,))
    if best.best_value < -TOL.residual:
        return CheckVerdict(
            Status.INCONCLUSIVE,
            residual_minima=[best.best_value],
            minimizers=[best.best_point],
            notes=[
                f"best alpha = {alpha:.6g} leaves residual minimum {best.best_value:.3g} < 0",
                "no escaping point was found; the set may still be invariant (try restricted mode)",
            ],
            details={"effort": _effort(config), "mode": mode.value, "alpha": alpha},
        )
    v = verify_convex_alpha(S, f, alpha, mode, config)
    v.details.update({"alpha": alpha, "search_value": best.best_value})
    return v


def wolfe_dual_value(S: SublevelSet, f: VectorField, alpha: float, config: OptConfig = OptConfig(), penalty: float = 1e3) -> OptResult:
    """Maximise ``phi = alpha g - g(f)`` subject to ``grad phi = 0``.

    Quadratic-penalty ascent on ``phi - penalty |grad phi|^2`` from
    multistart points, then Newton steps on ``grad phi = 0`` to land exactly
    on the stationarity set. The best ``phi`` over stationary endpoints is the
    dual value. A note flags hypotheses that were only sampled.
    """
    n = S.dim
    if alpha < -TOL.certificate_sign:
        raise NegativeMultiplier("alpha must be nonnegative")
    phi = convex_residual(S, f, max(alpha, 0.0))
    grad, hess = derivatives(phi, n)
    P = compile_expr(phi)
    Gf = compile_exprs(grad)
    Hf = compile_exprs([h for row in hess for h in row])
    hyps, ok, _ = _convex_hypotheses(S, f, config)
    notes = []
    if not all(h.certified for h in hyps):
        notes.append("HypothesisUnverified: convexity hypotheses only sampled")
    if not ok:
        notes.append("HypothesisUnverified: convexity hypotheses fail; dual value need not match the primal")

    def value(X):
        g = Gf(X)
        return -P(X) + penalty * np.einsum("ij,ij->j", g, g)

    def gradient_fn(X):
        g = Gf(X)
        Hm = Hf(X).reshape(n, n, -1)
        return -g + 2 * penalty * np.einsum("ijk,jk->ik", Hm, g)

    obj = Objective(value, gradient_fn, n)
    X0 = halton_points(n, max(8, config.starts // 4), config.seed, config.box)
    X, _, _, _ = _descend(obj, X0, config.with_(max_iters=min(config.max_iters, 200)), box_projection(config.box))

    for _ in range(50):
        g = Gf(X)
        if np.all(np.linalg.norm(g, axis=0) <= 1e-12):
            break
        Hm = Hf(X).reshape(n, n, -1)
        for j in range(X.shape[1]):
            if np.all(np.isfinite(Hm[:, :, j])) and np.all(np.isfinite(g[:, j])):
                X[:, j] -= np.linalg.pinv(Hm[:, :, j]) @ g[:, j]
    gnorm = _grad_norm_by_continuity(Gf, X)
    vals = P(X)
    stationary = gnorm <= 1e-8 * (1.0 + np.linalg.norm(X, axis=0))
    vals = np.where(stationary & np.isfinite(vals), vals, -np.inf)
    if not np.isfinite(vals).any():
        notes.append("no stationary point found")
        return OptResult(X[:, 0], -math.inf, OptStatus.ITER_CAP, X.shape[1], {}, notes)
    j = int(np.argmax(vals))
    return OptResult(X[:, j].copy(), float(P(X[:, j : j + 1])[0]), OptStatus.CONVERGED, X.shape[1],
                     {"stationary_points": int(stationary.sum())}, notes)


def _grad_norm_by_continuity(Gf, X: np.ndarray) -> np.ndarray:
    """Gradient norms; where the symbolic gradient is NaN (e.g. ``sqrt`` at 0)
    the smallest finite norm at tiny offsets along axis and diagonal
    directions is used instead."""
    g = Gf(X)
    norms = np.linalg.norm(g, axis=0)
    n = X.shape[0]
    dirs = np.hstack([np.eye(n), -np.eye(n), np.ones((n, 1)), -np.ones((n, 1))])
    dirs /= np.linalg.norm(dirs, axis=0)
    for j in np.flatnonzero(~np.isfinite(norms)):
        x = X[:, j : j + 1]
        d = 1e-9 * (1.0 + np.abs(x).max())
        gn = np.linalg.norm(Gf(x + d * dirs), axis=0)
        gn = gn[np.isfinite(gn)]
        norms[j] = gn.min() if gn.size else np.inf
    return norms


def epsilon_implication(phi: Expr, psi: Expr, f: VectorField, config: OptConfig = OptConfig()) -> CheckVerdict:
    """Decide ``phi(x) <= 0  =>  psi(f(x)) <= 0`` via ``eps* = sup psi(f(x))`` on ``phi <= 0``.

    With ``psi = phi`` this is invariance of ``{phi <= 0}``; neither set needs
    to be convex.
    """
    n = f.dim
    target = f.compose(psi)
    try:
        res = minimize_in_sublevel(neg(target), phi, n, config)
    except (EmptyRegion, AllSamplesInvalid):
        return CheckVerdict(
            Status.VERIFIED,
            notes=["{phi <= 0} appears empty in the search box; the implication holds vacuously"],
            details={"effort": _effort(config)},
        )
    eps = -res.best_value
    x = res.best_point
    details = {"effort": _effort(config), "epsilon": eps}
    if eps <= TOL.residual:
        return CheckVerdict(Status.VERIFIED, residual_minima=[-eps], minimizers=[x],
                            notes=[f"eps* = {eps:.6g} <= 0"], details=details)
    xs = [float(v) for v in x]
    if evaluate(phi, xs) <= TOL.membership and evaluate(target, xs) > TOL.residual:
        return CheckVerdict(Status.FALSIFIED, counterexample=x, witness_kind=WitnessKind.ESCAPE,
                            residual_minima=[-eps], minimizers=[x],
                            notes=[f"eps* >= {eps:.6g} > 0: phi(x) <= 0 but psi(f(x)) > 0"], details=details)
    return CheckVerdict(Status.INCONCLUSIVE, residual_minima=[-eps], minimizers=[x],
                        notes=["positive eps* did not survive re-evaluation"], details=details)

"""Numerical engine for the max-min and boundary optimisation problems.

All local searches run batched: every start is a column of one array, so a
multistart run costs one vectorised evaluation per step regardless of the
number of starts. Each start keeps its own step length, so results do not
depend on which other starts are in the batch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import AllSamplesInvalid, EmptyRegion
from .expr import Expr, compile_expr, compile_exprs, gradient, substitute_affine

Array = np.ndarray


class OptStatus(enum.Enum):
    CONVERGED = "Converged"
    ITER_CAP = "IterCap"
    ALL_SAMPLES_INVALID = "AllSamplesInvalid"


@dataclass(frozen=True)
class OptConfig:
    starts: int = 64
    max_iters: int = 500
    grad_tol: float = 1e-10
    shrink: float = 0.5
    armijo: float = 1e-4
    box: tuple[float, float] = (-100.0, 100.0)
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1 or self.max_iters < 1:
            raise ValueError("starts and max_iters must be positive")
        if not (self.grad_tol > 0 and 0 < self.shrink < 1 and 0 < self.armijo < 1):
            raise ValueError("invalid step-control parameters")
        if not self.box[0] < self.box[1]:
            raise ValueError("search box is empty")

    def with_(self, **kw) -> "OptConfig":
        return replace(self, **kw)


@dataclass
class OptResult:
    best_point: Array
    best_value: float
    status: OptStatus
    starts_used: int
    history: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_point": [float(v) for v in self.best_point],
            "best_value": float(self.best_value),
            "status": self.status.value,
            "starts_used": self.starts_used,
            "notes": list(self.notes),
        }


class Objective:
    """A batched scalar function with gradient.

    ``value(X)`` maps ``(n, k)`` to ``(k,)``; ``grad(X)`` maps to ``(n, k)``.
    Non-finite values are reported as NaN and treated as +inf by minimisers.
    """

    def __init__(self, value: Callable[[Array], Array], grad: Callable[[Array], Array] | None, dim: int):
        self.dim = dim
        self._value = value
        self._grad = grad if grad is not None else self._fd_grad

    @classmethod
    def from_expr(cls, e: Expr, dim: int) -> "Objective":
        f = compile_expr(e)
        g = compile_exprs(gradient(e, dim))
        return cls(f, g, dim)

    @classmethod
    def wrap(cls, objective, dim: int) -> "Objective":
        if isinstance(objective, Objective):
            return objective
        if isinstance(objective, Expr):
            return cls.from_expr(objective, dim)
        if callable(objective):
            return cls(objective, None, dim)
        raise TypeError("objective must be an Expr, Objective or callable")

    def value(self, X: Array) -> Array:
        with np.errstate(all="ignore"):
            v = np.asarray(self._value(X), dtype=float)
        return np.where(np.isfinite(v), v, np.nan)

    def grad(self, X: Array) -> Array:
        with np.errstate(all="ignore"):
            return np.asarray(self._grad(X), dtype=float)

    def _fd_grad(self, X: Array) -> Array:
        # central differences, h = 1e-6 (1 + |x_i|)
        G = np.empty_like(X)
        for i in range(self.dim):
            h = 1e-6 * (1.0 + np.abs(X[i]))
            Xp = X.copy()
            Xm = X.copy()
            Xp[i] += h
            Xm[i] -= h
            G[i] = (self.value(Xp) - self.value(Xm)) / (2 * h)
        return G

    def negated(self) -> "Objective":
        return Objective(lambda X: -self.value(X), lambda X: -self.grad(X), self.dim)

    def plus(self, other: "Objective") -> "Objective":
        return Objective(
            lambda X: self.value(X) + other.value(X),
            lambda X: self.grad(X) + other.grad(X),
            self.dim,
        )


# ---------------------------------------------------------------------------
# start points and projections


def halton_points(dim: int, count: int, seed: int, box: tuple[float, float]) -> Array:
    """Scrambled Halton design; longer runs extend shorter ones for a fixed seed."""
    lo, hi = box
    if count == 0:
        return np.empty((dim, 0))
    return qmc.Halton(dim, scramble=True, seed=seed).random(count).T * (hi - lo) + lo


def box_projection(box: tuple[float, float]) -> Callable[[Array], Array]:
    lo, hi = box
    return lambda X: np.clip(X, lo, hi)


def ball_projection(X: Array) -> Array:
    nrm = np.linalg.norm(X, axis=0)
    return X / np.maximum(nrm, 1.0)


def sphere_projection(X: Array) -> Array:
    X = np.array(X, dtype=float)
    nrm = np.linalg.norm(X, axis=0)
    tiny = nrm < 1e-300
    X[:, tiny] = 0.0
    X[0, tiny] = 1.0
    nrm[tiny] = 1.0
    return X / nrm


def sphere_tangent(X: Array, G: Array) -> Array:
    return G - np.einsum("ij,ij->j", G, X) * X


def polytope_projection(A: Array, b: Array, cycles: int = 200) -> Callable[[Array], Array]:
    """Euclidean projection onto ``{x : A x <= b}`` by Dykstra's algorithm."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    sq = np.einsum("ij,ij->i", A, A)
    sq = np.where(sq == 0, 1.0, sq)

    def project(X: Array) -> Array:
        X = np.array(X, dtype=float)
        bad = np.any(A @ X - b[:, None] > 1e-12, axis=0)
        if not bad.any():
            return X
        Y = X[:, bad]
        incr = np.zeros((A.shape[0],) + Y.shape)
        for _ in range(cycles):
            prev = Y.copy()
            for j in range(A.shape[0]):
                Z = Y + incr[j]
                viol = np.maximum(A[j] @ Z - b[j], 0.0) / sq[j]
                Ynew = Z - np.outer(A[j], viol)
                incr[j] = Z - Ynew
                Y = Ynew
            if np.max(np.abs(Y - prev)) < 1e-13:
                break
        # clean up residual infeasibility of order 1e-13
        for _ in range(3):
            for j in range(A.shape[0]):
                viol = np.maximum(A[j] @ Y - b[j], 0.0) / sq[j]
                Y = Y - np.outer(A[j], viol)
        X[:, bad] = Y
        return X

    return project


def box_rows(dim: int, box: tuple[float, float]) -> tuple[Array, Array]:
    lo, hi = box
    return np.vstack([np.eye(dim), -np.eye(dim)]), np.concatenate([np.full(dim, hi), np.full(dim, -lo)])


# ---------------------------------------------------------------------------
# batched projected gradient descent


def _descend(
    obj: Objective,
    X: Array,
    config: OptConfig,
    project: Callable[[Array], Array],
    tangent: Callable[[Array, Array], Array] | None = None,
) -> tuple[Array, Array, Array, Array]:
    """Projected gradient descent with Armijo backtracking from each column of ``X``.

    The trial step of each start is the Barzilai-Borwein estimate
    ``|dx|^2 / <dx, dg>`` from its previous accepted move (doubling the last
    step when the curvature estimate is not positive), so quadratics
    converge in a handful of iterations.

    ``tangent`` optionally strips the normal component of the gradient when
    the domain is a manifold (sphere, level set).
    Returns final points, values, iteration counts and a converged mask.
    """
    X = project(np.array(X, dtype=float))
    k = X.shape[1]
    fx = obj.value(X)
    fx = np.where(np.isnan(fx), np.inf, fx)
    active = np.isfinite(fx)
    converged = ~active
    iters = np.zeros(k, dtype=int)
    step = np.ones(k)
    prev_X = np.full_like(X, np.nan)
    prev_G = np.full_like(X, np.nan)

    for _ in range(config.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = X[:, idx]
        G = obj.grad(Xa)
        bad_grad = ~np.all(np.isfinite(G), axis=0)
        G = np.where(np.isfinite(G), G, 0.0)
        if tangent is not None:
            G = tangent(Xa, G)
        dx = Xa - prev_X[:, idx]
        dg = G - prev_G[:, idx]
        sy = np.einsum("ij,ij->j", dx, dg)
        ss = np.einsum("ij,ij->j", dx, dx)
        with np.errstate(all="ignore"):
            bb = ss / sy
        use_bb = np.isfinite(bb) & (sy > 0) & (ss > 0)
        step[idx] = np.where(use_bb, np.clip(bb, 1e-12, 1e6), step[idx])
        prev_X[:, idx] = Xa
        prev_G[:, idx] = G
        pg = Xa - project(Xa - G)
        pg_norm = np.linalg.norm(pg, axis=0)
        done = (pg_norm < config.grad_tol) | bad_grad
        iters[idx] += 1

        t = step[idx].copy()
        pending = ~done
        Xnew = Xa.copy()
        fnew = fx[idx].copy()
        moved = np.zeros(idx.size, dtype=bool)
        for _bt in range(80):
            p = np.flatnonzero(pending)
            if p.size == 0:
                break
            trial = project(Xa[:, p] - t[p] * G[:, p])
            ft = obj.value(trial)
            ft = np.where(np.isnan(ft), np.inf, ft)
            decrease = np.einsum("ij,ij->j", G[:, p], Xa[:, p] - trial)
            ok = ft <= fx[idx][p] - config.armijo * decrease
            acc = p[ok]
            Xnew[:, acc] = trial[:, ok]
            fnew[acc] = ft[ok]
            moved[acc] = True
            pending[acc] = False
            t[p[~ok]] *= config.shrink
        stalled = pending | (
            moved
            & (np.abs(fx[idx] - fnew) <= 1e-15 * (1.0 + np.abs(fnew)))
            & (np.linalg.norm(Xnew - Xa, axis=0) <= 1e-14 * (1.0 + np.linalg.norm(Xa, axis=0)))
        )
        X[:, idx] = Xnew
        fx[idx] = fnew
        step[idx] = np.where(moved, np.minimum(t * 2.0, 1e6), t)
        finished = done | stalled
        converged[idx[finished]] = True
        active[idx[finished]] = False

    return X, fx, iters, converged


def _choose_starts(obj: Objective, dim: int, config: OptConfig, pool: int = 4096) -> tuple[Array, int]:
    """First ``starts`` valid Halton points plus the best points of a fixed screening pool."""
    cand = halton_points(dim, max(pool, 8 * config.starts), config.seed, config.box)
    vals = obj.value(cand)
    valid = np.flatnonzero(np.isfinite(vals))
    if valid.size == 0:
        raise AllSamplesInvalid("objective is NaN at every candidate start")
    first = valid[: config.starts]
    n_best = max(1, config.starts // 8)
    screen = np.flatnonzero(np.isfinite(vals[:pool]))
    best = screen[np.argsort(vals[screen], kind="stable")[:n_best]]
    chosen = np.unique(np.concatenate([first, best]))
    return cand[:, chosen], int(len(vals) - valid.size)


def _result(obj, X, fx, iters, converged, notes=None, extra=None) -> OptResult:
    j = int(np.argmin(fx))
    point = X[:, j].copy()
    value = float(obj.value(point[:, None])[0])
    status = OptStatus.CONVERGED if converged[j] else OptStatus.ITER_CAP
    history = {
        "start_values": [float(v) for v in fx],
        "iterations": [int(v) for v in iters],
    }
    if extra:
        history.update(extra)
    return OptResult(point, value, status, X.shape[1], history, list(notes or []))


def minimize_multistart(
    objective,
    dim: int,
    config: OptConfig = OptConfig(),
    *,
    project: Callable[[Array], Array] | None = None,
    starts: Array | None = None,
) -> OptResult:
    """Minimise over the search box (or a custom projected domain) from many starts.

    ``objective`` is an :class:`Expr` (symbolic gradient), an
    :class:`Objective`, or a batched callable (central-difference gradient).
    Starts default to a scrambled Halton design over ``config.box``.

    Raises:
        AllSamplesInvalid: the objective is NaN at every start.
    """
    obj = Objective.wrap(objective, dim)
    notes = []
    invalid_fraction = 0.0
    if project is None:
        project = box_projection(config.box)
    if starts is None:
        starts, n_invalid = _choose_starts(obj, dim, config)
        invalid_fraction = n_invalid / max(4096, 8 * config.starts)
        if n_invalid:
            notes.append(f"{n_invalid} candidate starts evaluated to NaN")
    else:
        starts = np.asarray(starts, dtype=float)
        vals = obj.value(project(starts))
        if not np.isfinite(vals).any():
            raise AllSamplesInvalid("objective is NaN at every start")
    X, fx, iters, conv = _descend(obj, starts, config, project)
    return _result(obj, X, fx, iters, conv, notes, {"invalid_fraction": invalid_fraction})


def minimize_in_ellipsoid(objective: Expr, Q_to_x: Array, dim: int, config: OptConfig = OptConfig(), boundary: bool = False) -> OptResult:
    """Minimise over ``{M u : |u| <= 1}`` (or the sphere ``|u| = 1``), ``M = L^{-T}``.

    The objective is rewritten in ``u`` so that the ball projection is exact.
    Returned points are in ``x`` coordinates.
    """
    h = substitute_affine(objective, Q_to_x)
    rng = np.random.default_rng(config.seed)
    U = rng.standard_normal((dim, 4 * config.starts))
    U /= np.linalg.norm(U, axis=0)
    if not boundary:
        U[:, : config.starts] *= rng.uniform(0, 1, config.starts) ** (1.0 / dim)
        U = np.hstack([np.zeros((dim, 1)), U])
    proj = sphere_projection if boundary else ball_projection
    tangent = sphere_tangent if boundary else None
    obj = Objective.from_expr(h, dim)
    vals = obj.value(U)
    valid = np.flatnonzero(np.isfinite(vals))
    if valid.size == 0:
        raise AllSamplesInvalid("objective is NaN at every start on the ellipsoid")
    keep = valid[: config.starts]
    notes = []
    if valid.size < U.shape[1]:
        notes.append(f"{U.shape[1] - valid.size} of {U.shape[1]} candidate starts evaluated to NaN")
    X, fx, iters, conv = _descend(obj, U[:, keep], config, proj, tangent)
    res = _result(obj, X, fx, iters, conv, notes)
    res.best_point = Q_to_x @ res.best_point
    res.history["invalid_fraction"] = 1.0 - valid.size / U.shape[1]
    return res


def minimize_in_polytope(objective, A: Array, b: Array, dim: int, config: OptConfig = OptConfig(), extra_starts: Array | None = None) -> OptResult:
    """Minimise over ``{x : A x <= b}`` intersected with the search box."""
    Bg, Bb = box_rows(dim, config.box)
    AA = np.vstack([np.atleast_2d(A), Bg])
    bb = np.concatenate([np.ravel(b), Bb])
    proj = polytope_projection(AA, bb)
    obj = Objective.wrap(objective, dim)
    cand = halton_points(dim, 8 * config.starts, config.seed, config.box)
    inside = np.all(AA @ cand <= bb[:, None], axis=0)
    pts = [cand[:, inside][:, : config.starts]]
    if extra_starts is not None:
        pts.append(np.asarray(extra_starts, dtype=float))
    pts.append(proj(cand[:, ~inside][:, : max(1, config.starts // 4)]))
    S = np.hstack(pts)
    vals = obj.value(S)
    if not np.isfinite(vals).any():
        raise AllSamplesInvalid("objective is NaN at every start in the polytope")
    S = S[:, np.isfinite(vals)]
    X, fx, iters, conv = _descend(obj, S, config, proj)
    return _result(obj, X, fx, iters, conv)


def _penalised(obj: Objective, cons: Objective, weight: float, equality: bool) -> Objective:
    def value(X):
        c = cons.value(X)
        c = c if equality else np.maximum(c, 0.0)
        return obj.value(X) + weight * c * c

    def grad(X):
        c = cons.value(X)
        c = c if equality else np.maximum(c, 0.0)
        return obj.grad(X) + 2.0 * weight * c * cons.grad(X)

    return Objective(value, grad, obj.dim)


def _radial_retraction(g: Callable, center: Array, equality: bool, box):
    """Pull infeasible columns back to ``g <= 0`` (or onto ``g = 0``) along rays from ``center``."""
    from .sets import _ray_boundary_many

    def project(X: Array) -> Array:
        X = np.clip(np.array(X, dtype=float), *box)
        vals = g(X)
        if equality:
            need = np.abs(vals) > 1e-12
        else:
            need = np.isnan(vals) | (vals > 0)
        D = X[:, need] - center[:, None]
        nd = np.linalg.norm(D, axis=0)
        moving = nd >= 1e-14
        cols = np.flatnonzero(need)[moving]
        if cols.size == 0:
            return X
        pts, found = _ray_boundary_many(g, center, D[:, moving] / nd[moving], box)
        X[:, cols[found]] = pts[:, found]
        if not equality:
            X[:, cols[~found]] = center[:, None]
        return X

    return project


def minimize_in_sublevel(
    objective,
    constraint: Expr,
    dim: int,
    config: OptConfig = OptConfig(),
    center: Array | None = None,
    weights: Sequence[float] = (1e3, 1e4, 1e5),
) -> OptResult:
    """Minimise over ``{x : constraint(x) <= 0}`` within the search box.

    Quadratic-penalty descent for each weight in ``weights``, then a
    retraction of infeasible iterates along rays from an interior point and
    a final projected descent using that retraction. Feasible Halton points
    (rejection sampling) are kept as candidates too.

    Raises:
        EmptyRegion: no feasible point was found.
    """
    obj = Objective.wrap(objective, dim)
    cons = Objective.from_expr(constraint, dim)
    g = compile_expr(constraint)
    cand = halton_points(dim, max(4096, 16 * config.starts), config.seed, config.box)
    gv = g(cand)
    feasible = np.flatnonzero(gv <= 0)
    if center is None:
        if feasible.size == 0:
            raise EmptyRegion("constraint set appears empty in the search box")
        center = cand[:, feasible[np.argmin(gv[feasible])]]
    center = np.asarray(center, dtype=float)
    starts = np.hstack([center[:, None], cand[:, feasible[: config.starts]]])
    if starts.shape[1] < config.starts // 2:
        starts = np.hstack([starts, cand[:, : config.starts]])
    box_proj = box_projection(config.box)
    X = starts
    for w in weights:
        pen = _penalised(obj, cons, w / max(1.0, _scale(obj, starts)), equality=False)
        X, _, _, _ = _descend(pen, X, config.with_(max_iters=max(50, config.max_iters // 2)), box_proj)
    retract = _radial_retraction(g, center, False, config.box)
    X = retract(X)
    X, fx, iters, conv = _descend(obj, np.hstack([X, starts]), config, retract)
    ok = g(X) <= 1e-12
    fx = np.where(ok, fx, np.inf)
    if not np.isfinite(fx).any():
        raise AllSamplesInvalid("no feasible finite objective value found")
    return _result(obj, X, fx, iters, conv)


def _scale(obj: Objective, X: Array) -> float:
    v = obj.value(X)
    v = v[np.isfinite(v)]
    return float(np.median(np.abs(v))) if v.size else 1.0


def maximize_on_level_set(
    objective,
    constraint,
    dim: int,
    config: OptConfig = OptConfig(),
    *,
    center: Array | None = None,
    boundary_samples: Array | None = None,
    weights: Sequence[float] = (1e3, 1e4, 1e5),
) -> OptResult:
    """Maximise ``objective`` subject to ``constraint(x) = 0``.

    ``constraint`` may be an :class:`~invacheck.sets.Ellipsoid`, in which case
    the boundary ``x^T Q x = 1`` is parameterised exactly by the unit
    sphere. For a general expression the search runs quadratic-penalty
    ascent with the given weights, re-projects every iterate onto the level
    set by bisection along rays from ``center`` and polishes with projected
    ascent. The returned value is the maximum (not its negation).
    """
    from .sets import Ellipsoid

    obj = Objective.wrap(objective, dim)
    if isinstance(constraint, Ellipsoid):
        if not isinstance(objective, Expr):
            raise TypeError("ellipsoid boundary search needs a symbolic objective")
        from .expr import neg

        res = minimize_in_ellipsoid(neg(objective), constraint.to_x(), dim, config, boundary=True)
        res.best_value = -res.best_value
        res.history["start_values"] = [-v for v in res.history["start_values"]]
        return res

    g = compile_expr(constraint)
    cons = Objective.from_expr(constraint, dim)
    if center is None:
        from .sets import SublevelSet, sublevel_interior_point

        center = sublevel_interior_point(SublevelSet(constraint, dim), config.box)
    center = np.asarray(center, dtype=float)
    retract = _radial_retraction(g, center, True, config.box)
    if boundary_samples is None:
        rng = np.random.default_rng(config.seed)
        D = rng.standard_normal((dim, config.starts))
        boundary_samples = retract(center[:, None] + D)
    starts = np.asarray(boundary_samples, dtype=float)
    if starts.shape[1] == 0:
        raise EmptyRegion("no boundary points available")
    neg_obj = obj.negated()
    X = starts
    scale = max(1.0, _scale(obj, starts))
    for w in weights:
        pen = _penalised(neg_obj, cons, w / scale, equality=True)
        X, _, _, _ = _descend(pen, X, config.with_(max_iters=max(50, config.max_iters // 2)), box_projection(config.box))
    X = retract(X)

    def tangent(X, G):
        N = cons.grad(X)
        nn = np.einsum("ij,ij->j", N, N)
        nn = np.where(nn > 0, nn, 1.0)
        return G - np.einsum("ij,ij->j", G, N) / nn * N

    X, fx, iters, conv = _descend(neg_obj, np.hstack([X, starts]), config, retract, tangent)
    on = np.abs(g(X)) <= 1e-9
    fx = np.where(on & np.isfinite(fx), fx, np.inf)
    if not np.isfinite(fx).any():
        raise AllSamplesInvalid("no boundary point with a finite objective")
    res = _result(neg_obj, X, fx, iters, conv)
    res.best_value = -res.best_value
    res.history["start_values"] = [-v for v in res.history["start_values"]]
    return res


def maximize_in_polytope(objective, A, b, dim, config=OptConfig(), extra_starts=None) -> OptResult:
    obj = Objective.wrap(objective, dim).negated()
    res = minimize_in_polytope(obj, A, b, dim, config, extra_starts)
    res.best_value = -res.best_value
    res.history["start_values"] = [-v for v in res.history["start_values"]]
    return res


# ---------------------------------------------------------------------------
# outer scalar search

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def maximin_scalar(
    inner: Callable[[float], OptResult],
    upper: float,
    grid: int = 33,
    refine: int = 3,
    lower: float = 0.0,
    candidates: Sequence[float] = (),
) -> tuple[float, OptResult]:
    """Maximise ``m -> inner(m).best_value`` over ``[lower, upper]``.

    A uniform grid locates the best cell, then golden-section search
    (``8 * refine`` iterations) refines inside the neighbouring cells.
    ``candidates`` inside the range are evaluated as well, which lets
    callers supply values where the maximum is known to be attainable
    exactly (a kink of a piecewise-linear value function, say). The best
    multiplier seen anywhere is returned with its inner result.
    """
    if grid < 3 or refine < 1:
        raise ValueError("grid must be >= 3 and refine >= 1")
    if upper < lower:
        raise ValueError("empty multiplier range")
    seen: dict[float, OptResult] = {}

    def value(m: float) -> float:
        if m not in seen:
            seen[m] = inner(m)
        v = seen[m].best_value
        return v if math.isfinite(v) else -math.inf

    if upper == lower:
        return lower, inner(lower)
    ms = np.linspace(lower, upper, grid)
    vals = [value(float(m)) for m in ms]
    j = int(np.argmax(vals))
    a = float(ms[max(j - 1, 0)])
    b = float(ms[min(j + 1, grid - 1)])
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = value(c), value(d)
    for _ in range(8 * refine):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = value(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = value(d)
    for m in candidates:
        if lower <= m <= upper:
            value(float(m))
    best = max(seen, key=lambda m: (value(m), -m))
    return best, seen[best]

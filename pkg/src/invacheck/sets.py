"""Candidate invariant sets: polyhedra, origin-centred ellipsoids, sublevel sets.

Each set supports a membership test and seeded samplers for its interior,
boundary and (for polyhedra) individual faces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np
from scipy.stats import qmc

from .errors import DimensionError, EmptyRegion, NoBoundaryFound, NotPositiveDefinite
from .expr import Expr, compile_expr, evaluate, parse_expr
from .linalg import cholesky, linprog, min_eigenvalue
from .tolerances import TOL

DEFAULT_BOX = (-100.0, 100.0)


class Convexity(enum.Enum):
    CERTIFIED_CONVEX = "CertifiedConvex"
    SAMPLED_CONVEX = "SampledConvex"
    UNKNOWN = "Unknown"


@dataclass(eq=False)
class Polyhedron:
    """``{x : G x <= b}``."""

    G: np.ndarray
    b: np.ndarray
    origin_interior: bool = False

    def __post_init__(self):
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        m, n = self.G.shape
        if m < 1 or n < 1:
            raise DimensionError("polyhedron needs at least one row and column")
        if self.b.size != m:
            raise DimensionError(f"b has length {self.b.size}, expected {m}")
        if self.origin_interior and not np.all(self.b > 0):
            from .errors import OriginNotInterior

            raise OriginNotInterior("origin-interior polyhedra need b > 0")

    @property
    def dim(self) -> int:
        return self.G.shape[1]

    @property
    def rows(self) -> int:
        return self.G.shape[0]

    @classmethod
    def box(cls, lo, hi) -> "Polyhedron":
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        n = lo.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))

    def face(self, i: int) -> "Face":
        return Face(self, i)

    def violation(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.max(self.G @ X - self.b[:, None], axis=0)


@dataclass(eq=False)
class Ellipsoid:
    """``{x : x^T Q x <= 1}`` with ``Q`` symmetric positive definite."""

    Q: np.ndarray
    L: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.L = cholesky(self.Q)
        if min_eigenvalue(self.Q) <= TOL.cholesky_pivot:
            raise NotPositiveDefinite("ellipsoid matrix must be positive definite")

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def to_x(self) -> np.ndarray:
        """``L^{-T}``: maps the unit ball onto the ellipsoid."""
        return np.linalg.solve(self.L.T, np.eye(self.dim))

    def violation(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.einsum("ik,ij,jk->k", X, self.Q, X) - 1.0


@dataclass(eq=False)
class SublevelSet:
    """``{x : g(x) <= 0}``; convexity of ``g`` is probed, never assumed."""

    g: Expr
    dim: int
    convexity_status: Convexity = Convexity.UNKNOWN
    interior_hint: np.ndarray | None = None

    def __post_init__(self):
        if self.g.max_index() > self.dim:
            raise DimensionError(f"g uses x{self.g.max_index()} beyond dimension {self.dim}")

    @classmethod
    def parse(cls, text: str, dim: int, **kw) -> "SublevelSet":
        return cls(parse_expr(text, dim), dim, **kw)

    def with_status(self, status: Convexity) -> "SublevelSet":
        return replace(self, convexity_status=status)

    def violation(self, X: np.ndarray) -> np.ndarray:
        return compile_expr(self.g)(np.asarray(X, dtype=float))


@dataclass(eq=False)
class Face:
    """``{x in P : G_i x = b_i}`` (``index`` is zero-based)."""

    parent: Polyhedron
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.parent.rows:
            raise DimensionError(f"face index {self.index} out of range")

    @property
    def dim(self) -> int:
        return self.parent.dim

    @property
    def normal(self) -> np.ndarray:
        return self.parent.G[self.index]

    @property
    def offset(self) -> float:
        return float(self.parent.b[self.index])


AnySet = Union[Polyhedron, Ellipsoid, SublevelSet]


class Region(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


def _check_dim(s, x: np.ndarray) -> None:
    if x.shape[0] != s.dim:
        raise DimensionError(f"point has length {x.shape[0]}, expected {s.dim}")


def violation(s: AnySet, X) -> np.ndarray:
    """Signed constraint violation per column of ``X`` (``<= 0`` inside)."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    _check_dim(s, X)
    v = s.violation(X)
    return v[0] if single else v


def contains(s: AnySet, x, tol: float = TOL.membership) -> bool:
    """Membership with slack ``tol``; NaN evaluations count as outside."""
    x = np.asarray(x, dtype=float).ravel()
    _check_dim(s, x)
    v = float(violation(s, x))
    return bool(v <= tol) if not math.isnan(v) else False


def contains_many(s: AnySet, X, tol: float = TOL.membership) -> np.ndarray:
    v = violation(s, np.asarray(X, dtype=float))
    with np.errstate(invalid="ignore"):
        return np.where(np.isnan(v), False, v <= tol)


def is_domain_point(s: AnySet, x) -> bool:
    """False when evaluating membership at ``x`` produces NaN."""
    return not math.isnan(float(violation(s, np.asarray(x, dtype=float).ravel())))


# ---------------------------------------------------------------------------
# polyhedral geometry


def _box_rows(n: int, box: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = box
    return np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([np.full(n, hi), np.full(n, -lo)])


def chebyshev_center(
    P: Polyhedron, face: int | None = None, box: tuple[float, float] = DEFAULT_BOX
) -> tuple[np.ndarray, float]:
    """Centre and radius of the largest ball inside ``P`` (or inside a face).

    The search is confined to ``box`` so unbounded polyhedra still yield a
    finite answer. For a face the ball lives in the face's hyperplane.

    Raises:
        EmptyRegion: the region is empty.
    """
    n = P.dim
    Bg, Bb = _box_rows(n, box)
    G = np.vstack([P.G, Bg])
    b = np.concatenate([P.b, Bb])
    A_eq = b_eq = None
    if face is not None:
        gi = P.G[face]
        proj = np.eye(n) - np.outer(gi, gi) / (gi @ gi)
        norms = np.linalg.norm(G @ proj, axis=1)
        keep = np.ones(G.shape[0], dtype=bool)
        keep[face] = False
        G, b, norms = G[keep], b[keep], norms[keep]
        A_eq = np.concatenate([gi, [0.0]])[None, :]
        b_eq = np.array([P.b[face]])
    else:
        norms = np.linalg.norm(G, axis=1)
    # the radius cap keeps the LP bounded when the face is a single point
    A_ub = np.vstack([np.hstack([G, norms[:, None]]), np.eye(1, n + 1, n)])
    b = np.concatenate([b, [box[1] - box[0]]])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    free = np.ones(n + 1, dtype=bool)
    free[-1] = False
    res = linprog(c, A_ub, b, A_eq, b_eq, free=free)
    if not res.optimal:
        raise EmptyRegion("polyhedron is empty" if face is None else f"face {face} is empty")
    return res.x[:n], float(res.x[n])


def interior_point(P: Polyhedron, box: tuple[float, float] = DEFAULT_BOX) -> np.ndarray:
    """A strictly interior point found by LP phase I.

    Raises:
        EmptyRegion: ``P`` has no interior inside ``box``.
    """
    x, r = chebyshev_center(P, None, box)
    if r <= 1e-9:
        raise EmptyRegion("polyhedron has empty interior")
    return x


def _hit_and_run(
    G: np.ndarray,
    b: np.ndarray,
    x0: np.ndarray,
    k: int,
    rng: np.random.Generator,
    normal: np.ndarray | None = None,
    offset: float | None = None,
    burn: int = 20,
    thin: int = 3,
) -> np.ndarray:
    n = x0.size
    x = x0.copy()
    out = np.empty((n, k))
    total = burn + k * thin
    for step in range(total):
        d = rng.standard_normal(n)
        if normal is not None:
            d -= (normal @ d) / (normal @ normal) * normal
        nd = np.linalg.norm(d)
        # a zero-dimensional face leaves no direction to move in
        if nd >= 1e-14:
            d /= nd
            gd = G @ d
            slack = b - G @ x
            with np.errstate(divide="ignore", invalid="ignore"):
                t = slack / gd
            upper = t[gd > 1e-14]
            lower = t[gd < -1e-14]
            tmax = max(float(upper.min()) if upper.size else 0.0, 0.0)
            tmin = min(float(lower.max()) if lower.size else 0.0, 0.0)
            x = x + rng.uniform(tmin, tmax) * d
        if normal is not None:
            x += (offset - normal @ x) / (normal @ normal) * normal
        if step >= burn and (step - burn) % thin == thin - 1:
            out[:, (step - burn) // thin] = x
    return out


def _unit_sphere(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    U = rng.standard_normal((n, k))
    U /= np.linalg.norm(U, axis=0)
    return U


def sample(
    s: AnySet | Face,
    region: Region | str | Face = Region.INTERIOR,
    count: int = 16,
    seed: int = 0,
    box: tuple[float, float] = DEFAULT_BOX,
) -> np.ndarray:
    """Seeded samples from a set's interior, boundary or a polyhedral face.

    Returns an array of shape ``(n, count)``. ``region`` may be
    ``"interior"``, ``"boundary"``, a :class:`Face`, or (for polyhedra) an
    integer row index meaning that face.

    Raises:
        EmptyRegion: the requested interior or face is empty.
        NoBoundaryFound: a sublevel set looks unbounded along every ray.
    """
    rng = np.random.default_rng(seed)
    if isinstance(s, Face):
        region, s = s, s.parent
    if isinstance(region, int) and not isinstance(region, bool):
        region = Face(s, region)
    if isinstance(region, str):
        region = Region(region)

    if isinstance(s, Ellipsoid):
        M = s.to_x()
        U = _unit_sphere(s.dim, count, rng)
        if region is Region.INTERIOR:
            U *= rng.uniform(0, 1, count) ** (1.0 / s.dim)
            return M @ U
        if region is Region.BOUNDARY:
            X = M @ U
            return X / np.sqrt(np.einsum("ik,ij,jk->k", X, s.Q, X))
        raise ValueError("ellipsoids have no faces")

    if isinstance(s, Polyhedron):
        Bg, Bb = _box_rows(s.dim, box)
        G = np.vstack([s.G, Bg])
        b = np.concatenate([s.b, Bb])
        if region is Region.INTERIOR:
            x0 = interior_point(s, box)
            return _hit_and_run(G, b, x0, count, rng)
        if region is Region.BOUNDARY:
            faces = []
            for i in range(s.rows):
                try:
                    chebyshev_center(s, i, box)
                    faces.append(i)
                except EmptyRegion:
                    continue
            if not faces:
                raise EmptyRegion("polyhedron has no nonempty face")
            out = np.empty((s.dim, count))
            per = [len(range(j, count, len(faces))) for j in range(len(faces))]
            for j, i in enumerate(faces):
                if per[j]:
                    out[:, j :: len(faces)] = sample(
                        s, Face(s, i), per[j], int(rng.integers(2**31)), box
                    )
            return out
        if isinstance(region, Face):
            i = region.index
            x0, _ = chebyshev_center(s, i, box)
            keep = np.ones(G.shape[0], dtype=bool)
            keep[i] = False
            return _hit_and_run(G[keep], b[keep], x0, count, rng, s.G[i], float(s.b[i]))
        raise ValueError(f"unknown region {region!r}")

    if isinstance(s, SublevelSet):
        c = sublevel_interior_point(s, box)
        U = _unit_sphere(s.dim, count, rng)
        X = np.empty((s.dim, count))
        g = compile_expr(s.g)
        found = 0
        for j in range(count):
            pt = _ray_boundary(g, c, U[:, j], box)
            if pt is None:
                # retry along fresh directions before giving up on this slot
                for _ in range(32):
                    pt = _ray_boundary(g, c, _unit_sphere(s.dim, 1, rng)[:, 0], box)
                    if pt is not None:
                        break
            if pt is None:
                if region is Region.BOUNDARY:
                    continue
                pt = _ray_exit_box(c, U[:, j], box)
            else:
                found += 1
            X[:, j] = pt
        if region is Region.BOUNDARY:
            if found == 0:
                raise NoBoundaryFound("sublevel set appears unbounded along every ray")
            if found < count:
                raise NoBoundaryFound(f"only {found} of {count} rays reached the boundary")
            return X
        if region is Region.INTERIOR:
            t = rng.uniform(0, 1, count) ** (1.0 / s.dim)
            return c[:, None] + t * (X - c[:, None])
        raise ValueError("sublevel sets have no faces")

    raise TypeError(f"unsupported set type {type(s).__name__}")


def _ray_exit_box(c: np.ndarray, d: np.ndarray, box) -> np.ndarray:
    lo, hi = box
    with np.errstate(divide="ignore"):
        t = np.where(d > 0, (hi - c) / d, np.where(d < 0, (lo - c) / d, np.inf))
    return c + float(t.min()) * d


def _ray_boundary(g, c: np.ndarray, d: np.ndarray, box, tol: float = TOL.boundary):
    """Root of ``g(c + t d) = 0`` with ``t > 0``; ``None`` if the ray never exits."""
    pts, found = _ray_boundary_many(g, c, np.asarray(d, dtype=float)[:, None], box, tol)
    return pts[:, 0] if found[0] else None


def _ray_boundary_many(g, c: np.ndarray, D: np.ndarray, box, tol: float = TOL.boundary):
    """Boundary crossings of ``g`` along the rays ``c + t D[:, j]``, ``t > 0``.

    The step ``t`` doubles from ``min(1, exit)`` until ``g > 0`` (or the ray
    leaves ``box``), then the bracket is refined by false position with the
    Illinois modification, falling back to the midpoint where ``g`` is NaN.
    The reported point is always the feasible end of the bracket, so
    samples never lie outside. Returns ``(points, found)``; columns whose
    ray never exits keep ``c`` and are marked ``False``.
    """
    n, k = D.shape
    c = np.asarray(c, dtype=float)
    lo, hi = box
    with np.errstate(divide="ignore", invalid="ignore"):
        tb = np.where(D > 0, (hi - c[:, None]) / D, np.where(D < 0, (lo - c[:, None]) / D, np.inf))
    limit = np.linalg.norm(D * tb.min(axis=0), axis=0)
    g0 = float(g(c[:, None])[0])
    lo_t = np.zeros(k)
    g_lo = np.full(k, g0)
    hi_t = np.full(k, np.nan)
    g_hi = np.full(k, np.nan)
    t = np.minimum(1.0, limit)
    searching = np.ones(k, dtype=bool)
    found = np.zeros(k, dtype=bool)
    while searching.any():
        j = np.flatnonzero(searching)
        v = g(c[:, None] + t[j] * D[:, j])
        out = v > 0
        hi_t[j[out]] = t[j[out]]
        g_hi[j[out]] = v[out]
        found[j[out]] = True
        ok = ~out & ~np.isnan(v)
        lo_t[j[ok]] = t[j[ok]]
        g_lo[j[ok]] = v[ok]
        stop = out | (t[j] >= limit[j])
        searching[j[stop]] = False
        t[j] = np.minimum(2.0 * t[j], limit[j])
    active = found & ~(np.abs(g_lo) <= tol)
    side = np.zeros(k, dtype=int)  # endpoint kept last time: -1 low, +1 high
    for _ in range(200):
        j = np.flatnonzero(active)
        if j.size == 0:
            break
        a, b, ga, gb = lo_t[j], hi_t[j], g_lo[j], g_hi[j]
        with np.errstate(all="ignore"):
            trial = a - ga * (b - a) / (gb - ga)
        mid = 0.5 * (a + b)
        bad = ~np.isfinite(trial) | (trial <= a) | (trial >= b)
        trial = np.where(bad, mid, trial)
        v = g(c[:, None] + trial * D[:, j])
        up = np.isnan(v) | (v > 0)
        jj, vv = j[up], v[up]
        hi_t[jj] = trial[up]
        g_hi[jj] = np.where(np.isnan(vv), np.nan, vv)
        # Illinois: the low end survived twice, so damp its function value
        g_lo[jj] = np.where(side[jj] == -1, 0.5 * g_lo[jj], g_lo[jj])
        side[jj] = -1
        jj, vv = j[~up], v[~up]
        lo_t[jj] = trial[~up]
        g_lo[jj] = vv
        g_hi[jj] = np.where(side[jj] == 1, 0.5 * g_hi[jj], g_hi[jj])
        side[jj] = 1
        done = (np.abs(g_lo[j]) <= tol) | (hi_t[j] - lo_t[j] <= 1e-16 * np.maximum(1.0, hi_t[j]))
        active[j[done]] = False
    pts = np.repeat(c[:, None], k, axis=1)
    pts[:, found] = c[:, None] + lo_t[found] * D[:, found]
    return pts, found


def sublevel_interior_point(
    s: SublevelSet, box: tuple[float, float] = DEFAULT_BOX, samples: int = 4096
) -> np.ndarray:
    """A point with ``g < 0``: the hint, the origin, or the best of a Halton scan.

    Raises:
        EmptyRegion: no strictly feasible point was found.
    """
    g = compile_expr(s.g)
    for cand in (s.interior_hint, np.zeros(s.dim)):
        if cand is not None:
            cand = np.asarray(cand, dtype=float)
            v = float(g(cand[:, None])[0])
            if v < 0:
                return cand
    lo, hi = box
    H = qmc.Halton(s.dim, scramble=True, seed=0).random(samples).T * (hi - lo) + lo
    vals = g(H)
    vals = np.where(np.isnan(vals), np.inf, vals)
    j = int(np.argmin(vals))
    if vals[j] < 0:
        return H[:, j]
    raise EmptyRegion("no strictly feasible point found for the sublevel set")


def project_to_level(
    g_expr: Expr, X: np.ndarray, center: np.ndarray, box=DEFAULT_BOX
) -> np.ndarray:
    """Move each column of ``X`` onto ``g = 0`` by bisection along the ray from ``center``."""
    g = compile_expr(g_expr)
    out = np.empty_like(X)
    keep = np.ones(X.shape[1], dtype=bool)
    for j in range(X.shape[1]):
        d = X[:, j] - center
        nd = np.linalg.norm(d)
        if nd < 1e-14:
            keep[j] = False
            continue
        pt = _ray_boundary(g, center, d / nd, box)
        if pt is None:
            keep[j] = False
            continue
        out[:, j] = pt
    return out[:, keep]

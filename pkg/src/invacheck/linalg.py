"""Small dense linear algebra kernel.

Cholesky factorisation, a cyclic Jacobi eigensolver for symmetric matrices,
semidefiniteness tests built on it, and a two-phase simplex method with
Bland's rule for equality-form linear programs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NoConvergence, NotPositiveDefinite
from .tolerances import TOL


def _as_matrix(M, name: str = "matrix") -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(M)):
        raise ArithmeticError(f"{name} has non-finite entries")
    return M


def _check_symmetric(M: np.ndarray, tol: float = TOL.symmetric) -> None:
    if M.shape[0] != M.shape[1]:
        raise DimensionError("matrix must be square")
    if np.max(np.abs(M - M.T)) > tol:
        raise ValueError("matrix is not symmetric")


def cholesky(Q) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == Q``.

    Raises:
        NotPositiveDefinite: a pivot falls below ``1e-12``.
    """
    Q = _as_matrix(Q, "Q")
    _check_symmetric(Q)
    n = Q.shape[0]
    L = np.zeros_like(Q)
    for j in range(n):
        pivot = Q[j, j] - L[j, :j] @ L[j, :j]
        if pivot < TOL.cholesky_pivot:
            raise NotPositiveDefinite(f"pivot {pivot:.3g} at column {j}")
        L[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (Q[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def sym_eigen(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns.

    Raises:
        NoConvergence: off-diagonal mass still above ``1e-12`` after 100 sweeps.
    """
    A = _as_matrix(M, "M")
    _check_symmetric(A)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1.0)
    # absolute threshold, relaxed for large-norm inputs so that rounding
    # noise in the rotated matrix cannot stall the sweep
    threshold = max(TOL.eigen_offdiag, 1e-15 * scale)

    def off(A):
        return float(np.linalg.norm(A - np.diag(np.diag(A))))

    for _ in range(TOL.eigen_max_sweeps):
        if off(A) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        if off(A) >= threshold:
            raise NoConvergence("Jacobi sweeps exhausted; rescale the matrix")
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def max_eigenvalue(M) -> float:
    return float(sym_eigen(M)[0][0])


def min_eigenvalue(M) -> float:
    return float(sym_eigen(M)[0][-1])


def is_neg_semidefinite(M, tol: float = TOL.neg_semidefinite) -> bool:
    """True iff the largest eigenvalue of symmetric ``M`` is at most ``tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return max_eigenvalue(M) <= tol


def is_pos_semidefinite(M, tol: float = TOL.neg_semidefinite) -> bool:
    return min_eigenvalue(M) >= -tol


# ---------------------------------------------------------------------------
# linear programming


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LpProblem:
    """``min c^T x  s.t.  A_eq x = b_eq,  x >= lower``."""

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
        self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        if self.A_eq.size == 0:
            self.A_eq = np.zeros((0, self.c.size))
        if self.A_eq.shape[1] != self.c.size:
            raise DimensionError("A_eq column count must equal len(c)")
        if self.A_eq.shape[0] != self.b_eq.size:
            raise DimensionError("A_eq row count must equal len(b_eq)")
        if self.lower is None:
            self.lower = np.zeros(self.c.size)
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        if self.lower.size != self.c.size:
            raise DimensionError("lower bounds must match len(c)")


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None = None
    value: float = math.nan
    iterations: int = 0
    reduced_costs: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Dense simplex tableau ``[A | b]`` with an explicit basis list."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        self.T = np.hstack([A, b[:, None]])
        self.basis = list(basis)
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        self.basis[row] = col
        self.iterations += 1

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        cb = c[self.basis]
        return c - cb @ self.T[:, :-1]

    def run(self, c: np.ndarray, allowed: np.ndarray, max_iter: int = 50_000) -> str:
        """Bland's rule iterations on cost ``c``; returns 'optimal' or 'unbounded'."""
        tol = TOL.lp_pivot
        for _ in range(max_iter):
            d = self.reduced_costs(c)
            entering = -1
            for j in np.flatnonzero(allowed):
                if d[j] < -tol and j not in self.basis:
                    entering = int(j)
                    break
            if entering < 0:
                return "optimal"
            col = self.T[:, entering]
            rhs = self.T[:, -1]
            best_ratio = math.inf
            leaving = -1
            for r in range(self.T.shape[0]):
                if col[r] > tol:
                    ratio = rhs[r] / col[r]
                    if ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12
                        and self.basis[r] < self.basis[leaving]
                    ):
                        best_ratio = ratio
                        leaving = r
            if leaving < 0:
                return "unbounded"
            self.pivot(leaving, entering)
        raise NoConvergence("simplex iteration cap reached")


def lp_solve(p: LpProblem) -> LpResult:
    """Two-phase simplex with Bland's anti-cycling rule.

    Infeasible and unbounded problems are reported through ``status``.

    Raises:
        ArithmeticError: non-finite data.
    """
    for arr in (p.c, p.A_eq, p.b_eq, p.lower):
        if not np.all(np.isfinite(arr)):
            raise ArithmeticError("LP data must be finite")
    m, n = p.A_eq.shape
    # shift x = y + lower so that y >= 0
    b = p.b_eq - p.A_eq @ p.lower
    A = p.A_eq.copy()
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    offset = float(p.c @ p.lower)

    if m == 0:
        if np.any(p.c < -TOL.lp_pivot):
            return LpResult(LpStatus.UNBOUNDED)
        return LpResult(LpStatus.OPTIMAL, p.lower.copy(), offset, 0, p.c.copy())

    # phase I: artificials n..n+m-1
    A1 = np.hstack([A, np.eye(m)])
    tab = _Tableau(A1, b, list(range(n, n + m)))
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab.run(c1, np.ones(n + m, dtype=bool))
    infeas = float(c1[tab.basis] @ tab.T[:, -1])
    if infeas > TOL.lp_feasibility * max(1.0, float(np.abs(b).max())):
        return LpResult(LpStatus.INFEASIBLE, iterations=tab.iterations)

    # drive artificials out of the basis; drop redundant rows
    r = 0
    while r < len(tab.basis):
        if tab.basis[r] >= n:
            row = tab.T[r, :n]
            cand = [j for j in range(n) if abs(row[j]) > TOL.lp_pivot and j not in tab.basis]
            if cand:
                tab.pivot(r, cand[0])
            else:
                tab.T = np.delete(tab.T, r, axis=0)
                del tab.basis[r]
                continue
        r += 1
    tab.T = np.hstack([tab.T[:, :n], tab.T[:, -1:]])

    if not tab.basis:
        # every equality was redundant
        if np.any(p.c < -TOL.lp_pivot):
            return LpResult(LpStatus.UNBOUNDED, iterations=tab.iterations)
        return LpResult(LpStatus.OPTIMAL, p.lower.copy(), offset, tab.iterations, p.c.copy())

    outcome = tab.run(p.c, np.ones(n, dtype=bool))
    if outcome == "unbounded":
        return LpResult(LpStatus.UNBOUNDED, iterations=tab.iterations)
    y = np.zeros(n)
    y[tab.basis] = np.maximum(tab.T[:, -1], 0.0)
    x = y + p.lower
    return LpResult(
        LpStatus.OPTIMAL,
        x,
        float(p.c @ x),
        tab.iterations,
        tab.reduced_costs(p.c),
    )


def linprog(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    free: bool | np.ndarray = False,
) -> LpResult:
    """Inequality-form convenience wrapper around :func:`lp_solve`.

    Solves ``min c^T x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``.
    Variables are nonnegative unless flagged in ``free`` (a bool or a
    per-variable mask), in which case they are split into two nonnegative
    parts. The returned ``x`` is in the original variables.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    free_mask = np.broadcast_to(np.asarray(free, dtype=bool), (n,)).copy()
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.size == 0:
        A_ub = np.zeros((0, n))
    if A_eq.size == 0:
        A_eq = np.zeros((0, n))

    free_idx = np.flatnonzero(free_mask)
    k = free_idx.size
    m_ub = A_ub.shape[0]

    def expand(M):
        return np.hstack([M, -M[:, free_idx]])

    cols = n + k
    A_std = np.vstack(
        [
            np.hstack([expand(A_ub), np.eye(m_ub)]),
            np.hstack([expand(A_eq), np.zeros((A_eq.shape[0], m_ub))]),
        ]
    )
    b_std = np.concatenate([b_ub, b_eq])
    c_std = np.concatenate([c, -c[free_idx], np.zeros(m_ub)])
    res = lp_solve(LpProblem(c_std, A_std if A_std.shape[0] else np.zeros((0, cols + m_ub)), b_std))
    if not res.optimal:
        return res
    y = res.x
    x = y[:n].copy()
    x[free_idx] -= y[n : n + k]
    return LpResult(LpStatus.OPTIMAL, x, float(c @ x), res.iterations)

"""Numerical tolerances used across the toolkit, kept in one place."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    symmetric: float = 1e-10
    cholesky_pivot: float = 1e-12
    eigen_offdiag: float = 1e-12
    eigen_max_sweeps: int = 100
    neg_semidefinite: float = 1e-9
    lp_pivot: float = 1e-9
    lp_feasibility: float = 1e-8
    membership: float = 1e-8
    boundary: float = 1e-9
    hessian_sign: float = 1e-9
    residual: float = 1e-7
    certificate_sign: float = 1e-12
    escape: float = 1e-6
    strict_escape: float = 1e-3


TOL = Tolerances()

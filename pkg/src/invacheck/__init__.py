"""Decide, certify or falsify invariance of polyhedra, ellipsoids and convex
sublevel sets under nonlinear discrete and continuous dynamical systems."""

__version__ = "0.1.0"

from .continuous import (  # noqa: E402
    BoundaryReport,
    check_ellipsoid_continuous,
    check_polyhedron_continuous,
    check_sublevel_continuous,
)
from .convexity import Certainty, Shape, ShapeReport, probe  # noqa: E402
from .discrete import (  # noqa: E402
    epsilon_implication,
    linear_ellipsoid_check,
    linear_polyhedral_check,
    search_convex_alpha,
    search_ellipsoid_beta,
    search_polyhedral_H,
    verify_convex_alpha,
    verify_ellipsoid_beta,
    verify_polyhedral_H,
    wolfe_dual_value,
)
from .expr import Expr, VectorField, derivatives, evaluate, parse_expr, to_string  # noqa: E402
from .optimize import OptConfig, OptResult, OptStatus  # noqa: E402
from .oracle import EscapeReport, System, SystemKind, falsify, integrate_rk4, iterate_discrete  # noqa: E402
from .sets import Ellipsoid, Polyhedron, SublevelSet, contains, sample  # noqa: E402
from .verdict import Certificate, CheckVerdict, Exactness, Mode, Status  # noqa: E402

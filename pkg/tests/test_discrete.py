import math

import numpy as np
import pytest

from invacheck.discrete import (
    beta_upper_bound,
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
from invacheck.errors import DimensionError, NegativeEntries, NegativeMultiplier
from invacheck.expr import VectorField, evaluate, parse_expr
from invacheck.optimize import OptConfig
from invacheck.sets import Ellipsoid, Polyhedron, SublevelSet, contains
from invacheck.verdict import Exactness, Mode, Status, WitnessKind

from conftest import TRI_H, field

FAST = OptConfig(starts=24)


# ---------------------------------------------------------------------------
# polyhedra


def test_triangle_verify(tri):
    P, f = tri
    v = verify_polyhedral_H(P, f, TRI_H)
    assert v.status is Status.VERIFIED
    assert v.residual_minima == pytest.approx([3.75, 3.75, 3.625], abs=1e-5)
    assert np.allclose(v.minimizers[0], [0, 2.5], atol=1e-4)
    assert np.allclose(v.minimizers[2], [0.5, 1.75], atol=1e-4)
    assert v.exactness is Exactness.NUMERICAL


def test_zero_map_verifies_with_zero_H(box):
    v = verify_polyhedral_H(box, field("0", "0"), np.zeros((4, 4)), config=FAST)
    assert v.status is Status.VERIFIED
    assert min(v.residual_minima) == pytest.approx(1.0)


def test_negative_H_rejected(tri):
    P, f = tri
    with pytest.raises(NegativeEntries):
        verify_polyhedral_H(P, f, -np.eye(3))


def test_H_shape_checked(tri):
    P, f = tri
    with pytest.raises(DimensionError):
        verify_polyhedral_H(P, f, np.eye(2))


def test_triangle_search(tri):
    P, f = tri
    v = search_polyhedral_H(P, f, config=FAST)
    assert v.status is Status.VERIFIED
    H = np.asarray(v.certificate.value)
    assert np.all(H >= 0)
    assert max(v.details["rounds"]) <= 50
    again = verify_polyhedral_H(P, f, H)
    assert again.status is Status.VERIFIED


def test_restricted_half_map_zero_H(box):
    v = search_polyhedral_H(box, field("x1/2", "x2/2"), Mode.RESTRICTED, FAST)
    assert v.status is Status.VERIFIED
    assert np.all(np.asarray(v.certificate.value) == 0)


def test_doubling_escapes_box(box):
    f = field("2*x1", "2*x2")
    v = search_polyhedral_H(box, f, config=FAST)
    assert v.status is Status.FALSIFIED
    x = v.counterexample
    assert contains(box, x) and not contains(box, f(x))


@pytest.mark.parametrize("scale, status, values", [(0.5, Status.VERIFIED, 0.5), (1.0, Status.VERIFIED, 1.0), (2.0, Status.FALSIFIED, 2.0)])
def test_linear_polyhedral_fast_path(box, scale, status, values):
    v = linear_polyhedral_check(box, scale * np.eye(2))
    assert v.status is status
    assert v.exactness is Exactness.EXACT
    assert np.allclose(v.details["lp_values"], values)
    if status is Status.FALSIFIED:
        x = v.counterexample
        assert contains(box, x) and not contains(box, scale * x)


def test_linear_half_scale_H_is_valid(box):
    v = linear_polyhedral_check(box, 0.5 * np.eye(2))
    H = np.asarray(v.certificate.value)
    assert np.allclose(H @ box.G, box.G @ (0.5 * np.eye(2)))
    assert np.all(H @ box.b <= box.b + 1e-12)


def _random_linear(rng, n=2):
    A = rng.standard_normal((n, n))
    rho = max(abs(np.linalg.eigvals(A)))
    return A / rho * rng.uniform(0.3, 1.6)


def test_polyhedral_fast_path_agrees_with_search(box):
    rng = np.random.default_rng(4)
    for _ in range(8):
        A = _random_linear(rng)
        exact = linear_polyhedral_check(box, A)
        numeric = search_polyhedral_H(box, VectorField.linear(A), config=FAST)
        if numeric.status is not Status.INCONCLUSIVE:
            assert numeric.status is exact.status, A


def test_global_implies_restricted(tri, box):
    cases = [(tri[0], tri[1], TRI_H), (box, field("x1/2", "x2/2"), 0.5 * np.eye(4))]
    for P, f, H in cases:
        g = verify_polyhedral_H(P, f, H, Mode.GLOBAL, FAST)
        r = verify_polyhedral_H(P, f, H, Mode.RESTRICTED, FAST)
        if g.status is Status.VERIFIED:
            assert r.status is Status.VERIFIED


# ---------------------------------------------------------------------------
# ellipsoids


def test_sqrt_map_verify(sqrt_map):
    E, f = sqrt_map
    v = verify_ellipsoid_beta(E, f, 0.25)
    assert v.status is Status.VERIFIED
    assert v.residual_minima[0] == pytest.approx(0.25, abs=1e-5)
    assert np.allclose(v.minimizers[0], [1, -1], atol=1e-3)
    assert v.domain_flag
    assert any("DomainFlag" in n for n in v.notes)


def test_sqrt_map_residual_expansion(sqrt_map):
    # expands to ((x1-1)^2 + (x2+1)^2 + 1)/4 wherever the map is defined
    from invacheck.discrete import ellipsoid_residual

    E, f = sqrt_map
    r = ellipsoid_residual(E, f, 0.25)
    rng = np.random.default_rng(0)
    for _ in range(20):
        # stay where both square roots are defined
        x = np.array([rng.uniform(0.5, 3), rng.uniform(-0.4, 0.0)])
        expected = ((x[0] - 1) ** 2 + (x[1] + 1) ** 2 + 1) / 4
        assert evaluate(r, list(x)) == pytest.approx(expected, abs=1e-12)


def test_sqrt_map_search(sqrt_map):
    E, f = sqrt_map
    v = search_ellipsoid_beta(E, f, config=FAST)
    assert v.status is Status.VERIFIED
    # v(beta) = 1 - beta - 1/(8 beta) peaks at beta = 1/sqrt(8)
    assert v.certificate.value == pytest.approx(1 / math.sqrt(8), abs=1e-3)
    assert v.residual_minima[0] == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-5)
    assert v.residual_minima[0] >= 0.25


def test_zero_map_beta_zero(disk):
    v = verify_ellipsoid_beta(disk, field("0", "0"), 0.0, config=FAST)
    assert v.status is Status.VERIFIED
    assert v.residual_minima[0] == pytest.approx(1.0)


def test_doubling_restricted_beta_one(disk):
    v = verify_ellipsoid_beta(disk, field("2*x1", "2*x2"), 1.0, Mode.RESTRICTED, FAST)
    assert v.status is Status.FALSIFIED
    assert v.residual_minima[0] == pytest.approx(-3.0, abs=1e-6)


def test_negative_beta_rejected(disk):
    with pytest.raises(NegativeMultiplier):
        verify_ellipsoid_beta(disk, field("x1", "x2"), -0.1)


def test_half_map_restricted_search(disk):
    v = search_ellipsoid_beta(disk, field("x1/2", "x2/2"), Mode.RESTRICTED, FAST)
    assert v.status is Status.VERIFIED
    assert v.residual_minima[0] >= 0


def test_doubling_search_witness_on_boundary(disk):
    v = search_ellipsoid_beta(disk, field("2*x1", "2*x2"), config=FAST)
    assert v.status is Status.FALSIFIED
    assert v.witness_kind is WitnessKind.ESCAPE
    x = v.counterexample
    assert contains(disk, x) and not contains(disk, 2 * x)


def test_beta_upper_bound(disk):
    assert beta_upper_bound(disk, field("x1/2", "x2/2")) == 1.0
    assert beta_upper_bound(disk, field("x1+0.5", "x2")) == pytest.approx(0.75)


@pytest.mark.parametrize(
    "A, status",
    [
        ([[0.0, 0.5], [-0.5, 0.0]], Status.VERIFIED),
        ([[1.0, 0.0], [0.0, 1.0]], Status.VERIFIED),
        ([[1.1, 0.0], [0.0, 0.5]], Status.FALSIFIED),
    ],
)
def test_linear_ellipsoid_fast_path(disk, A, status):
    A = np.array(A)
    v = linear_ellipsoid_check(disk, A)
    assert v.status is status
    assert v.exactness is Exactness.EXACT
    if status is Status.FALSIFIED:
        x = v.counterexample
        assert np.allclose(np.abs(x), [1, 0])
        assert np.linalg.norm(A @ x) ** 2 == pytest.approx(1.21)
    elif A[0, 1] == 0.5:
        assert np.allclose(v.details["eigenvalues"], [-0.75, -0.75])


def test_ellipsoid_fast_path_agrees_with_search():
    rng = np.random.default_rng(9)
    for _ in range(6):
        B = rng.standard_normal((2, 2))
        E = Ellipsoid(B @ B.T + np.eye(2))
        A = _random_linear(rng)
        exact = linear_ellipsoid_check(E, A)
        numeric = search_ellipsoid_beta(E, VectorField.linear(A), config=OptConfig(starts=8), grid=9, refine=1)
        if numeric.status is not Status.INCONCLUSIVE:
            assert numeric.status is exact.status


# ---------------------------------------------------------------------------
# convex sets


def test_convex_alpha_quarter(circle):
    v = verify_convex_alpha(circle, field("x1/2", "x2/2"), 0.25, config=FAST)
    assert v.status is Status.VERIFIED
    assert v.residual_minima[0] == pytest.approx(0.75, abs=1e-6)


def test_convex_zero_map_alpha_zero(circle):
    v = verify_convex_alpha(circle, field("0", "0"), 0.0, config=FAST)
    assert v.status is Status.VERIFIED


def test_convex_doubling_alpha_four(circle):
    v = verify_convex_alpha(circle, field("2*x1", "2*x2"), 4.0, config=FAST)
    assert v.status is Status.FALSIFIED
    assert v.residual_minima[0] == pytest.approx(-3.0, abs=1e-6)


def test_convex_search_half_map(circle):
    v = search_convex_alpha(circle, field("x1/2", "x2/2"), config=FAST)
    assert v.status is Status.VERIFIED
    assert v.residual_minima[0] >= 0.75 - 1e-3


def test_convex_search_doubling(circle):
    v = search_convex_alpha(circle, field("2*x1", "2*x2"), config=FAST)
    assert v.status is Status.FALSIFIED
    x = v.counterexample
    assert abs(x @ x - 1) < 1e-3


def test_half_plane_identity():
    S = SublevelSet.parse("x1-1", 2)
    v = search_convex_alpha(S, field("x1", "x2"), config=FAST)
    assert v.status is Status.VERIFIED
    assert v.certificate.value == 1.0


@pytest.mark.parametrize(
    "g, f, alpha, expected",
    [
        ("x1^2+x2^2-1", ("x1/2", "x2/2"), 0.25, 0.75),
        ("x1-1", ("x1", "x2"), 1.0, 0.0),
        ("x1^2+x2^2-1", ("sqrt(x1+x2)/2", "sqrt(x1-3*x2)/2"), 0.25, 0.25),
    ],
)
def test_wolfe_dual_examples(g, f, alpha, expected):
    S = SublevelSet.parse(g, 2)
    res = wolfe_dual_value(S, field(*f), alpha, FAST)
    assert res.best_value == pytest.approx(expected, abs=1e-4)


def contraction_in_norm(P, rng, shrink):
    """``A`` with ``A^T P A = shrink^2 P``: a rotation in the ``P`` geometry."""
    w, V = np.linalg.eigh(P)
    root = V @ np.diag(np.sqrt(w)) @ V.T
    U, _ = np.linalg.qr(rng.standard_normal((P.shape[0], P.shape[0])))
    return shrink * np.linalg.solve(root, U @ root)


def test_wolfe_matches_inner_min_on_convex_quadratics():
    rng = np.random.default_rng(17)
    for _ in range(5):
        B = rng.standard_normal((2, 2))
        P = B @ B.T + 0.5 * np.eye(2)
        A = contraction_in_norm(P, rng, rng.uniform(0.2, 0.9))
        g = f"{float(P[0, 0])!r}*x1^2 + {float(2 * P[0, 1])!r}*x1*x2 + {float(P[1, 1])!r}*x2^2 - 1"
        S = SublevelSet.parse(g, 2)
        f = VectorField.linear(A)
        primal = verify_convex_alpha(S, f, 1.0, config=FAST).residual_minima[0]
        dual = wolfe_dual_value(S, f, 1.0, FAST).best_value
        assert abs(primal - dual) <= 1e-4 * (1 + abs(primal))


# ---------------------------------------------------------------------------
# epsilon form


@pytest.mark.parametrize(
    "phi, psi, f, eps, status",
    [
        ("x1^2-1", "x1-2", ("x1",), -1.0, Status.VERIFIED),
        ("x1^2+x2^2-1", "x1^2+x2^2-1", ("x1/2", "x2/2"), -0.75, Status.VERIFIED),
        ("x1^2+x2^2-1", "x1^2+x2^2-1", ("2*x1", "2*x2"), 3.0, Status.FALSIFIED),
    ],
)
def test_epsilon_examples(phi, psi, f, eps, status):
    n = len(f)
    v = epsilon_implication(parse_expr(phi, n), parse_expr(psi, n), field(*f), FAST)
    assert v.status is status
    assert v.details["epsilon"] == pytest.approx(eps, abs=1e-5)


@pytest.mark.parametrize(
    "g, f",
    [
        ("x1^2+x2^2-1", ("x1/2", "x2/2")),
        ("x1^2+x2^2-1", ("2*x1", "2*x2")),
        ("x1^2+x2^2-1", ("0.9*x2", "-0.9*x1")),
        ("x1^2+x2^2-1", ("x1+0.3", "x2")),
        ("x1^2+4*x2^2-1", ("x2", "x1/4")),
        ("x1-1", ("x1/2", "x2")),
    ],
)
def test_epsilon_agrees_with_restricted_alpha(g, f):
    S = SublevelSet.parse(g, 2)
    F = field(*f)
    eps = epsilon_implication(S.g, S.g, F, FAST)
    alpha = search_convex_alpha(S, F, Mode.RESTRICTED, FAST)
    assert (eps.status is Status.VERIFIED) == (alpha.status is Status.VERIFIED)

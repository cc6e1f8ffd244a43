import math

import numpy as np
import pytest

from invacheck.discrete import ellipsoid_residual
from invacheck.errors import AllSamplesInvalid
from invacheck.expr import VectorField, parse_expr
from invacheck.optimize import (
    OptConfig,
    OptStatus,
    maximin_scalar,
    maximize_on_level_set,
    minimize_in_ellipsoid,
    minimize_multistart,
)
from invacheck.sets import Ellipsoid

from conftest import SQRT_DYN


@pytest.mark.parametrize(
    "text, value, point",
    [
        ("x1^2 + (x2-2.5)^2 + 3.75", 3.75, (0.0, 2.5)),
        ("x1^2+2*x2^2-x1-7*x2+10", 3.625, (0.5, 1.75)),
        ("((x1-1)^2 + (x2+1)^2 + 1)/4", 0.25, (1.0, -1.0)),
    ],
)
def test_quadratic_minima(text, value, point):
    res = minimize_multistart(parse_expr(text, 2), 2)
    assert res.best_value == pytest.approx(value, abs=1e-6)
    assert np.allclose(res.best_point, point, atol=1e-6)
    assert res.status is OptStatus.CONVERGED


@pytest.mark.parametrize("field, expected", [(["-x1", "-x2"], -1.0), (["x1", "x2"], 1.0), (["x2", "-x1"], 0.0)])
def test_level_set_maximum(field, expected):
    f = VectorField.parse(field, 2)
    obj = parse_expr(f"({field[0]})*x1 + ({field[1]})*x2", 2)
    res = maximize_on_level_set(obj, Ellipsoid(np.eye(2)), 2)
    assert res.best_value == pytest.approx(expected, abs=1e-9)
    assert np.linalg.norm(res.best_point) == pytest.approx(1.0, abs=1e-9)


def test_level_set_on_expression_boundary():
    g = parse_expr("x1^2 + 4*x2^2 - 4", 2)
    res = maximize_on_level_set(parse_expr("x2", 2), g, 2, center=np.zeros(2))
    assert res.best_value == pytest.approx(1.0, abs=1e-6)


def test_multistart_deterministic():
    e = parse_expr("sin(3*x1) + cos(2*x2) + 0.01*(x1^2 + x2^2)", 2)
    a = minimize_multistart(e, 2, OptConfig(seed=5))
    b = minimize_multistart(e, 2, OptConfig(seed=5))
    assert a.best_value == b.best_value
    assert np.array_equal(a.best_point, b.best_point)


def test_more_starts_never_worse():
    e = parse_expr("sin(3*x1) + cos(2*x2) + 0.01*(x1^2 + x2^2)", 2)
    prev = math.inf
    for starts in (4, 16, 64):
        val = minimize_multistart(e, 2, OptConfig(starts=starts, seed=1)).best_value
        assert val <= prev + 1e-12
        prev = val


def test_all_invalid():
    with pytest.raises(AllSamplesInvalid):
        minimize_multistart(parse_expr("sqrt(-1-x1^2)", 1), 1)


def test_invalid_fraction_recorded():
    res = minimize_multistart(parse_expr("sqrt(x1) + x1", 1), 1)
    assert 0.3 < res.history["invalid_fraction"] < 0.7
    assert res.best_value == pytest.approx(0.0, abs=1e-6)


def test_maximin_sqrt_map_value_function():
    # v(beta) = 1 - beta - 1/(8 beta) peaks at beta = 1/sqrt(8)
    E = Ellipsoid(np.eye(2))
    f = VectorField.parse(SQRT_DYN, 2)
    cfg = OptConfig(starts=32)

    def inner(beta):
        return minimize_multistart(ellipsoid_residual(E, f, beta), 2, cfg)

    for beta in (0.2, 0.25, 0.5):
        assert inner(beta).best_value == pytest.approx(1 - beta - 1 / (8 * beta), abs=1e-6)
    beta, res = maximin_scalar(inner, 1.0)
    assert beta == pytest.approx(1 / math.sqrt(8), abs=1e-3)
    assert res.best_value == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-6)


def test_maximin_alpha_circle():
    g = "x1^2+x2^2-1"
    E = Ellipsoid(np.eye(2))

    def inner(alpha):
        r = parse_expr(f"{alpha!r}*({g}) - ((x1/2)^2 + (x2/2)^2 - 1)", 2)
        return minimize_in_ellipsoid(r, E.to_x(), 2)

    alpha, res = maximin_scalar(inner, 1.0)
    assert res.best_value >= 0.75 - 1e-6
    assert alpha <= 0.25 + 1e-3


def test_maximin_degenerate_range():
    calls = []

    def inner(m):
        calls.append(m)
        return minimize_multistart(parse_expr("-(x1^2)", 1), 1, OptConfig(box=(-1, 1)))

    m, res = maximin_scalar(inner, 0.0)
    assert m == 0.0 and calls == [0.0]
    assert res.best_value == pytest.approx(-1.0)

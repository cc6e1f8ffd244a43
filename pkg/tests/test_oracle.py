import math

import numpy as np
import pytest

from invacheck.errors import UsageError
from invacheck.oracle import System, confirm_escape, falsify, integrate_rk4, iterate_discrete
from invacheck.sets import Ellipsoid, contains

from conftest import TRI_DYN, field


def test_triangle_iteration_stays(tri):
    P, f = tri
    assert np.allclose(f(np.array([0.0, 10.0])), [20, 90])
    rep = iterate_discrete(f, [0.0, 10.0], 10, P)
    assert not rep.escaped


def test_triangle_long_iteration_overflow_is_domain_escape(tri):
    P, f = tri
    rep = iterate_discrete(f, [0.0, 10.0], 12, P)
    assert not rep.escaped
    assert rep.domain_escape


def test_half_map_never_escapes(disk):
    rep = iterate_discrete(field("x1/2", "x2/2"), [0.9, 0.0], 50, disk)
    assert not rep.escaped
    assert np.linalg.norm(rep.final_point) < 1e-12


def test_doubling_escape_margin(disk):
    rep = iterate_discrete(field("2*x1", "2*x2"), [0.9, 0.0], 10, disk)
    assert rep.escaped and rep.index == 1
    assert np.allclose(rep.escape_point, [1.8, 0])
    assert rep.margin == pytest.approx(2.24)
    assert not contains(disk, rep.escape_point)


def test_start_outside_rejected(disk):
    with pytest.raises(UsageError):
        iterate_discrete(field("x1", "x2"), [2.0, 0.0], 1, disk)
    with pytest.raises(UsageError):
        integrate_rk4(field("x1", "x2"), [0.0, 0.0], 0.001, 0.01)


def test_rk4_decay():
    rep = integrate_rk4(field("-x1"), [1.0], 1.0, 0.01)
    assert abs(rep.final_point[0] - math.exp(-1)) <= 1e-6


def test_rk4_fourth_order():
    errs = [abs(integrate_rk4(field("-x1"), [1.0], 1.0, h).final_point[0] - math.exp(-1)) for h in (0.1, 0.05)]
    assert 12 <= errs[0] / errs[1] <= 20


def test_rotation_conserves_norm(disk):
    rep = integrate_rk4(field("x2", "-x1"), [0.99, 0.0], 20.0, 0.01, disk)
    assert not rep.escaped
    assert np.linalg.norm(rep.final_point) == pytest.approx(0.99, abs=1e-9)


def test_expansion_escape_time(disk):
    rep = integrate_rk4(field("x1", "x2"), [0.5, 0.0], 2.0, 0.01, disk)
    assert rep.escaped
    assert rep.time == pytest.approx(math.log(2), abs=0.02)


def test_nan_is_domain_escape_for_flows():
    # x' = sqrt(1 - x) reaches x = 1 at t = 2; RK4 steps past it into NaN
    rep = integrate_rk4(field("sqrt(1 - x1)"), [0.0], 3.0, 0.01, None)
    assert rep.domain_escape and not rep.escaped


def test_falsify_contraction(disk):
    assert falsify(disk, System.discrete(field("x1/2", "x2/2")), 1000, 50) is None


def test_falsify_triangle(tri):
    P, f = tri
    assert falsify(P, System.discrete(f), 1000, 50) is None


def test_falsify_box_rotation(box):
    rep = falsify(box, System.continuous(field("x2", "-x1")), 1000, 5.0, seed=3)
    assert rep is not None and rep.escaped
    # rotation preserves the norm, so only starts outside the inscribed disk can leave
    assert np.linalg.norm(rep.start) > 1


def test_falsify_deterministic_and_reproducible(box):
    sysc = System.continuous(field("x2", "-x1"))
    a = falsify(box, sysc, 500, 5.0, seed=1)
    b = falsify(box, sysc, 500, 5.0, seed=1)
    assert a.to_dict() == b.to_dict()
    again = confirm_escape(box, sysc, a.start, horizon=5.0)
    assert again.escaped and again.time == a.time


def test_escape_point_outside_membership(disk):
    rep = falsify(disk, System.discrete(field("1.5*x1", "x2")), 200, 10)
    assert rep.escaped
    assert not contains(disk, rep.escape_point, 1e-8)

import numpy as np
import pytest

from invacheck.expr import VectorField
from invacheck.sets import Ellipsoid, Polyhedron, SublevelSet


TRI_G = np.array([[1.0, -1.0], [2.0, -1.0], [1.0, -2.0]])
TRI_B = np.array([-10.0, 10.0, -20.0])
TRI_H = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])
TRI_DYN = ["-x1 + 2*x2 - x1^2", "-2*x1 - x2 + x2^2"]
SQRT_DYN = ["sqrt(x1+x2)/2", "sqrt(x1-3*x2)/2"]


@pytest.fixture
def tri():
    return Polyhedron(TRI_G, TRI_B), VectorField.parse(TRI_DYN, 2)


@pytest.fixture
def sqrt_map():
    return Ellipsoid(np.eye(2)), VectorField.parse(SQRT_DYN, 2)


@pytest.fixture
def disk():
    return Ellipsoid(np.eye(2))


@pytest.fixture
def circle():
    return SublevelSet.parse("x1^2+x2^2-1", 2)


@pytest.fixture
def box():
    return Polyhedron.box([-1.0, -1.0], [1.0, 1.0])


def field(*texts):
    return VectorField.parse(list(texts), len(texts))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])

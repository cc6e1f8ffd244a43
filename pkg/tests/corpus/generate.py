"""Regenerate the regression corpus: ``python3 tests/corpus/generate.py``.

Every instance is small enough to settle in about a second. The expected
status of each file is stored in ``expected.json``.
"""

import json
from pathlib import Path

HERE = Path(__file__).resolve().parent
BOX = {"kind": "polyhedron", "G": [[1, 0], [0, 1], [-1, 0], [0, -1]], "b": [1, 1, 1, 1]}
TRI = {"kind": "polyhedron", "G": [[1, -1], [2, -1], [1, -2]], "b": [-10, 10, -20]}
DISK = {"kind": "ellipsoid", "Q": [[1, 0], [0, 1]]}
ELL = {"kind": "ellipsoid", "Q": [[2, 0.5], [0.5, 1]]}
CIRCLE = {"kind": "sublevel", "g": "x1^2+x2^2-1"}
EFFORT = {"starts": 16}


def discrete(dyn, s, **extra):
    return {"dimension": len(dyn), "system": {"kind": "discrete", "dynamics": dyn}, "set": s, "search": EFFORT, **extra}


def continuous(dyn, s):
    return {"dimension": len(dyn), "system": {"kind": "continuous", "dynamics": dyn}, "set": s, "search": EFFORT}


CASES = {
    # polyhedra, discrete
    "poly_quadratic_triangle": (discrete(["-x1 + 2*x2 - x1^2", "-2*x1 - x2 + x2^2"], TRI), "VERIFIED"),
    "poly_box_half": (discrete(["x1/2", "x2/2"], BOX), "VERIFIED"),
    "poly_box_double": (discrete(["2*x1", "2*x2"], BOX), "FALSIFIED"),
    "poly_box_swap": (discrete(["x2", "x1"], BOX), "VERIFIED"),
    "poly_box_shear": (discrete(["x1 + 0.5*x2", "x2"], BOX), "FALSIFIED"),
    "poly_box_rot45": (discrete(["0.7071*x1 - 0.7071*x2", "0.7071*x1 + 0.7071*x2"], BOX), "FALSIFIED"),
    "poly_box_avg": (discrete(["0.5*x1 + 0.5*x2", "0.5*x1 - 0.5*x2"], BOX), "VERIFIED"),
    "poly_box_square_restricted": (discrete(["x1^2", "x2^2"], BOX, mode="restricted"), "VERIFIED"),
    "poly_box_shift": (discrete(["x1/2 + 0.6", "x2/2"], BOX), "FALSIFIED"),
    "poly_box_sin_restricted": (discrete(["sin(x1)", "0.9*x2"], BOX, mode="restricted"), "VERIFIED"),
    "poly_interval_half": (
        {**discrete(["0.5*x1"], {"kind": "polyhedron", "G": [[1], [-1]], "b": [1, 1]})},
        "VERIFIED",
    ),
    # ellipsoids, discrete
    "ell_sqrt_map": (discrete(["sqrt(x1+x2)/2", "sqrt(x1-3*x2)/2"], DISK), "VERIFIED"),
    "ell_disk_half": (discrete(["x1/2", "x2/2"], DISK), "VERIFIED"),
    "ell_disk_double": (discrete(["2*x1", "2*x2"], DISK), "FALSIFIED"),
    "ell_disk_rot_half": (discrete(["0.5*x2", "-0.5*x1"], DISK), "VERIFIED"),
    "ell_disk_stretch": (discrete(["1.1*x1", "0.5*x2"], DISK), "FALSIFIED"),
    "ell_disk_rotation": (discrete(["x2", "-x1"], DISK), "VERIFIED"),
    "ell_tilted_contract": (discrete(["0.6*x1", "0.6*x2"], ELL), "VERIFIED"),
    "ell_disk_shift": (discrete(["x1/2 + 0.7", "x2/2"], DISK), "FALSIFIED"),
    "ell_disk_cubic_restricted": (discrete(["x1^3", "x2^3"], DISK, mode="restricted"), "VERIFIED"),
    # sublevel sets, discrete
    "sub_circle_half": (discrete(["x1/2", "x2/2"], CIRCLE), "VERIFIED"),
    "sub_circle_double": (discrete(["2*x1", "2*x2"], CIRCLE), "FALSIFIED"),
    "sub_halfplane_identity": (discrete(["x1", "x2"], {"kind": "sublevel", "g": "x1-1"}), "VERIFIED"),
    "sub_halfplane_push": (discrete(["x1 + 1", "x2"], {"kind": "sublevel", "g": "x1-1"}), "FALSIFIED"),
    "sub_ellipse_swap": (discrete(["x2", "x1/4"], {"kind": "sublevel", "g": "x1^2+4*x2^2-1"}), "VERIFIED"),
    "sub_circle_rot_restricted": (discrete(["0.8*x2", "-0.8*x1"], CIRCLE, mode="restricted"), "VERIFIED"),
    # continuous
    "cont_box_inward": (continuous(["-x1", "-x2"], BOX), "VERIFIED"),
    "cont_box_outward": (continuous(["x1", "x2"], BOX), "FALSIFIED"),
    "cont_box_rotation": (continuous(["x2", "-x1"], BOX), "FALSIFIED"),
    "cont_disk_inward": (continuous(["-x1", "-x2"], DISK), "VERIFIED"),
    "cont_disk_rotation": (continuous(["x2", "-x1"], DISK), "VERIFIED"),
    "cont_disk_outward": (continuous(["x1", "x2"], DISK), "FALSIFIED"),
    "cont_disk_spiral": (continuous(["-x1 + x2", "-x1 - x2"], DISK), "VERIFIED"),
    "cont_circle_inward": (continuous(["-x1", "-x2"], CIRCLE), "VERIFIED"),
    "cont_circle_saddle": (continuous(["x1", "-x2"], CIRCLE), "FALSIFIED"),
    "cont_halfplane_inward": (continuous(["-1", "0"], {"kind": "sublevel", "g": "x1-1"}), "VERIFIED"),
    "cont_vdp_small_disk": (continuous(["x2", "-x1 - x2 + x1^2*x2"], {"kind": "ellipsoid", "Q": [[4, 0], [0, 4]]}), "VERIFIED"),
}


def main():
    for old in HERE.glob("*.json"):
        old.unlink()
    expected = {}
    for name, (doc, status) in CASES.items():
        doc = {"name": name, **doc}
        (HERE / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        expected[name] = status
    (HERE / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()

"""
Boundary checks for flows
=========================

A closed convex set is invariant under x' = f(x) when the field never points
out of it on the boundary. For the unit disk this means f(x)^T x <= 0 on the
circle; for a box it is checked face by face. A violated condition is
confirmed by integrating from the worst boundary point with RK4.
"""

import numpy as np

from invacheck import Ellipsoid, Polyhedron, VectorField
from invacheck.continuous import check_ellipsoid_continuous, check_polyhedron_continuous

disk = Ellipsoid(np.eye(2))
box = Polyhedron.box([-1, -1], [1, 1])

fields = {
    "contraction": ["-x1", "-x2"],
    "rotation": ["x2", "-x1"],
    "expansion": ["x1", "x2"],
    "damped oscillator": ["x2", "-x1 - 0.5*x2"],
}

print("unit disk")
for name, dyn in fields.items():
    v = check_ellipsoid_continuous(disk, VectorField.parse(dyn, 2))
    extra = f" (escape at t = {v.details['escape_time']:.2f})" if v.details.get("escape_time") else ""
    print(f"  {name:18s} max f.x = {v.details['max_value']:+.6f}  {v.status.value}{extra}")

# %%
# The rotation leaves the disk invariant but not the box: near a corner the
# flow crosses a face.
print("\nbox [-1, 1]^2")
for name, dyn in fields.items():
    v = check_polyhedron_continuous(box, VectorField.parse(dyn, 2))
    where = f" worst face {v.details['violating_face'] + 1} at {np.round(v.counterexample, 3)}" if v.counterexample is not None else ""
    print(f"  {name:18s} face maxima {np.round(v.details['maxima'], 4)}  {v.status.value}{where}")

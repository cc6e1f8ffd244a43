"""
A square-root map on the unit disk
==================================

    x1+ = sqrt(x1 + x2) / 2,   x2+ = sqrt(x1 - 3 x2) / 2

The map is only defined on part of the disk, so every optimiser skips NaN
points and the verdict records how much of the search was invalid.

For an ellipsoid x^T Q x <= 1 the certificate is a scalar beta >= 0 with

    beta x^T Q x - f(x)^T Q f(x) - beta + 1 >= 0   for all x.

Here f^T f = (x1 - x2) / 2, so the residual is a quadratic in x and its
minimum over beta has a closed form: v(beta) = 1 - beta - 1 / (8 beta).
"""

import math

import numpy as np

from invacheck import Ellipsoid, VectorField
from invacheck.discrete import ellipsoid_residual, search_ellipsoid_beta, verify_ellipsoid_beta
from invacheck.expr import to_string

E = Ellipsoid(np.eye(2))
f = VectorField.parse(["sqrt(x1+x2)/2", "sqrt(x1-3*x2)/2"], 2)

print("residual at beta = 1/4:", to_string(ellipsoid_residual(E, f, 0.25)))
v = verify_ellipsoid_beta(E, f, 0.25)
print("verdict:", v.status.value, " minimum", round(v.residual_minima[0], 8), "at", np.round(v.minimizers[0], 6))
for note in v.notes:
    print("  note:", note)

# %%
# beta = 1/4 works, but it is not the best multiplier. The search maximises
# the inner minimum over beta; compare with the closed form.
best = search_ellipsoid_beta(E, f)
beta = best.certificate.value
print(f"\nsearched beta {beta:.6f}  inner minimum {best.residual_minima[0]:.6f}")
print(f"closed form   {1 / math.sqrt(8):.6f}  value {1 - 1 / math.sqrt(2):.6f}")
for b in (0.15, 0.25, 0.35, 0.5, 0.75):
    vb = verify_ellipsoid_beta(E, f, b).residual_minima[0]
    print(f"  v({b:.2f}) = {vb:.6f}   1 - b - 1/(8b) = {1 - b - 1 / (8 * b):.6f}")

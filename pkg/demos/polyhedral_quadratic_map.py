"""
A quadratic map on a triangle
=============================

The map

    x1+ = -x1 + 2 x2 - x1^2
    x2+ = -2 x1 - x2 + x2^2

is iterated on the unbounded triangle G x <= b. A nonnegative 3x3 matrix H
certifies invariance when every row residual

    r_i(x) = H_i^T G x - G_i^T f(x) - H_i^T b + b_i

is nonnegative everywhere. Each residual here is a convex quadratic, so the
multistart minimiser finds its minimum reliably; a brute-force trajectory
search gives an independent check.
"""

import numpy as np

from invacheck import Polyhedron, VectorField
from invacheck.discrete import polyhedral_residual, search_polyhedral_H, verify_polyhedral_H
from invacheck.expr import to_string
from invacheck.oracle import System, falsify

G = np.array([[1.0, -1.0], [2.0, -1.0], [1.0, -2.0]])
b = np.array([-10.0, 10.0, -20.0])
P = Polyhedron(G, b)
f = VectorField.parse(["-x1 + 2*x2 - x1^2", "-2*x1 - x2 + x2^2"], 2)

# a hand-picked certificate
H = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 1]], dtype=float)
for i in range(3):
    print(f"r_{i + 1}(x) =", to_string(polyhedral_residual(P, f, H[i], i)))

verdict = verify_polyhedral_H(P, f, H)
print("\nverdict:", verdict.status.value)
for m, x in zip(verdict.residual_minima, verdict.minimizers):
    print(f"  row minimum {m:.6f} at {np.round(x, 6)}")
for h in verdict.hypothesis_report:
    print(f"  {h.label}: {h.verdict.value} ({h.certainty.value})")

# %%
# Without a certificate, the cutting-plane search proposes one row at a time
# and adds the worst point of each failed proposal as a new cut.
found = search_polyhedral_H(P, f)
print("\nsearched H:\n", np.round(np.asarray(found.certificate.value), 4))
print("cutting-plane rounds per row:", found.details["rounds"])

# %%
# The trajectory oracle should agree: no start in the triangle escapes.
report = falsify(P, System.discrete(f), n_samples=1000, horizon=50)
print("\noracle escape:", report)

# Far from the origin the iterates grow quickly and eventually overflow;
# the oracle reports that as a domain escape rather than as leaving the set.
from invacheck.oracle import iterate_discrete

long_run = iterate_discrete(f, [0.0, 10.0], 12, P)
print("from (0, 10):", "domain escape at step" if long_run.domain_escape else "stayed", long_run.index)

"""
The two-parameter operator family a P(u) + b u(x)u.

P(u) v = u v u is the congruence by u and (u(x)u) v = u tr(u v) is the tensor
square.  Sums of the two are closed under inversion, which keeps every
information operator in this package in closed form.
"""

import numpy as np

from wishfisher import lops, symspace
from wishfisher.lops import PQOperator

rng = np.random.default_rng(0)
u = symspace.random_spd(3, rng)

# Dense matrices act on orthonormal half-vector coordinates.
op = PQOperator(u, 1.0, -0.2)
print("dense form of P(u) - 0.2 u(x)u, order", op.n, "-> shape", op.to_dense().shape)

# The inverse lives at the inverse base point.
inv = lops.invert(op)
print("inverse coefficients a, b:", inv.a, inv.b)
print("|inv . op - id|:", np.linalg.norm(inv.to_dense() @ op.to_dense() - np.eye(op.m)))

# Determinant a^m det(u)^(n+1) (1 - n c) against dense linear algebra.
print("det closed form / dense:", lops.det(op), np.linalg.det(op.to_dense()))

# Definiteness flips at c = 1/n, where the operator becomes singular.
for c in (0.3, 1 / 3 - 1e-3, 1 / 3 + 1e-3, 0.5):
    probe = PQOperator(u, 1.0, -c)
    print(f"c = {c:.4f}: positive definite {probe.is_posdef()}, smallest eigenvalue {np.linalg.eigvalsh(probe.to_dense())[0]:+.3e}")

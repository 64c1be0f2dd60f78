"""Tour of the variable-exponent machinery on the unit interval.

Builds a mesh, picks p(x) = 2 + x, and walks through the modular, the
Luxemburg norm, the norm-modular bracketing, the Holder inequality and
the Sobolev embedding threshold, printing each check as it goes.
"""

import numpy as np

import vexlab as vx

mesh = vx.build_mesh(vx.Domain.interval(0.0, 1.0), 0.01)
p = vx.AffineExponent(2.0, [1.0])
lo, hi = p.bounds(vx.Domain.interval(0.0, 1.0))
print(f"mesh: {mesh.ncells} cells, exponent range [{lo}, {hi}]")

u = vx.DiscreteField.interpolate(mesh, lambda x: np.sin(np.pi * x[:, 0]))
rho = vx.modular(u, p).value
mu = vx.luxemburg_norm(u, p)
print(f"modular rho(u)      = {rho:.10f}")
print(f"luxemburg norm      = {mu:.10f}")

# The norm is defined through the modular: rho(u / norm) should be 1.
unit = vx.modular((1.0 / mu) * u, p).value
print(f"rho(u / norm)       = {unit:.12f}  (should be 1)")

# Bracketing: whichever of norm^p-, norm^p+ brackets the modular depends
# on which side of 1 the norm falls.
rep = vx.verify_modular_relations(u, p)
print(f"relation '{rep.relation}', unit gap {rep.unit_gap:.2e}, "
      f"passed = {rep.passed}")

# Scale the field by 40 and the norm scales exactly linearly.
mu_big = vx.luxemburg_norm(40.0 * u, p)
print(f"norm(40 u) / norm(u) = {mu_big / mu:.12f}  (should be 40)")

# Holder with the pointwise conjugate exponent.
v = vx.DiscreteField.interpolate(mesh, lambda x: np.cos(3 * x[:, 0]) + 0.2)
h = vx.holder_check(u, v, p)
print(f"holder: |int u v| = {h.lhs:.6f} <= {h.rhs:.6f}, "
      f"slack {h.slack:.3e}")

# Embedding headroom q+ < (p-)*: on an interval p- = 2 exceeds N = 1, so
# the Sobolev conjugate is infinite and any bounded q fits.
q = vx.ConstantExponent(3.0)
try:
    gap = vx.embedding_gap(p, q, vx.Domain.interval(0.0, 1.0))
    print(f"embedding gap = {gap}")
except vx.ExponentTooLarge:
    print("embedding gap: (p-)* = inf on this domain, q of no concern")

# How close p comes to failing the log-Holder modulus on this domain.
lh = vx.log_holder_estimate(p, vx.Domain.interval(0.0, 1.0),
                            pairs=2000, seed=0)
print(f"log-holder constant estimate {lh.c_hat:.4f} "
      f"from {lh.pairs_used} node pairs")

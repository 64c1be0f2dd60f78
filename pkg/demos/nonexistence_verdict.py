"""Nonexistence screening on star-shaped domains.

The verdict compares the source growth q- against the Sobolev conjugate
of p+ over a star-shaped domain.  Once q- reaches (p+)* the balance
coefficient (N - p+)/p+ - N/q- turns nonnegative and only the trivial
solution can satisfy the integral identity: case "ii" at equality,
case "i" strictly above.  Below the threshold the screen does not apply.
"""

import numpy as np

import vexlab as vx

ball = vx.Domain.ball(np.zeros(3), 1.0)
p2 = vx.ConstantExponent(2.0)

print(f"{'q':>5} {'case':>6} {'applies':>8} {'coefficient':>12}")
for qv in np.arange(4.0, 7.01, 0.5):
    r = vx.nonexistence_verdict(ball, p2, vx.ConstantExponent(qv))
    print(f"{qv:5.1f} {r.case:>6} {str(r.applies):>8} {r.coefficient:12.5f}")
p_star = float(vx.sobolev_conjugate(p2, 3).value_at(np.zeros((1, 3)))[0])
print(f"threshold (p+)* = {p_star}")

# Variable exponents enter through their extremes: p through its sup,
# q through its inf, both sampled over the domain.
print()
p_var = vx.RadialExponent(1.8, 0.2, np.zeros(3))   # p+ = 2 on the ball
q_var = vx.RadialExponent(7.0, -0.5, np.zeros(3))  # q- = 6.5
r = vx.nonexistence_verdict(ball, p_var, q_var)
print(f"radial p (sup 2.0), radial q (inf 6.5): case {r.case!r}, "
      f"coefficient {r.coefficient:.5f}")

# On a domain that is not star-shaped the identity has no admissible
# origin, so the screen refuses to conclude anything.
C_SHAPE = [(0, 0), (3, 0), (3, 1), (1, 1), (1, 2), (3, 2), (3, 3), (0, 3)]
r = vx.nonexistence_verdict(vx.Domain.polygon(C_SHAPE),
                            vx.ConstantExponent(1.5),
                            vx.ConstantExponent(9.0))
print(f"C-shaped domain: case {r.case!r}, star-shaped = {r.is_star}")

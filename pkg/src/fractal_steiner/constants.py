"""Dimension constants shared across modules."""

import math

D = 2


def omega(k: int) -> float:
    """Surface area of the unit sphere in R^k, k*pi^(k/2)/Gamma(k/2 + 1)."""
    return k * math.pi ** (k / 2) / math.gamma(k / 2 + 1)


OMEGA_1 = omega(1)
OMEGA_2 = omega(2)

assert abs(OMEGA_1 - 2.0) < 1e-15
assert abs(OMEGA_2 - 2.0 * math.pi) < 1e-15

# inradius of the largest triangle removed from the unit Sierpinski triangle
SG_INRADIUS = 1.0 / (4.0 * math.sqrt(3.0))

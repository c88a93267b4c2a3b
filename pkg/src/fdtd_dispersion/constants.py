"""Physical constants (SI)."""

import math

C0 = 2.99792458e8  # m/s, exact
MU0 = 4e-7 * math.pi  # H/m
EPS0 = 1.0 / (MU0 * C0 * C0)  # F/m

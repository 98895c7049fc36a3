"""
Why omega0 works
================

A player that knows P_A + P_B = gamma could update both estimates at every
step. With omega0 = gamma / (2 - gamma) the plain TOW difference equals
that simultaneous estimate, rescaled.
"""

import numpy as np

from towbombe.tow import tow_principle_gap

rng = np.random.default_rng(0)
for _ in range(5):
    n = rng.integers(1, 500, 2)
    l = rng.integers(0, n + 1)
    g = rng.uniform(0.1, 1.9)
    tow, both = tow_principle_gap(n[0], n[1], l[0], l[1], g)
    print(f"N={n}, L={l}, gamma={g:.2f}:  TOW {tow:9.4f}   simultaneous {both:9.4f}")

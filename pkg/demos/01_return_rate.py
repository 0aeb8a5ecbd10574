"""
Return rate of a quenched boson comb
====================================

A comb of N modes at omega_k = 2 pi k revives completely after every
period, so the return rate gamma(t) drops back to zero at t = 1, 2, 3...
How sharply it does so depends on the coupling exponent alpha.
"""

import numpy as np

from dqptlab import build_comb_spectrum, rate_series, transition_order

t = np.linspace(0, 3, 3001)

for alpha in (1, 0, -1):
    spec = build_comb_spectrum(1000, alpha=alpha)
    s = rate_series(spec, t)
    i = np.searchsorted(t, 1.0)
    print(f"alpha = {alpha:+d}")
    print(f"  max gamma over three periods   {s.gamma.max():.4f}")
    print(f"  gamma at t = 1                 {s.gamma[i]:.2e}")
    # the slope flips sign across t = 1 when gamma has a kink there
    print(f"  gamma' just before / after t=1 {s.d1[i - 3]:+.3f} / {s.d1[i + 3]:+.3f}")
    print(f"  transition order at t = 1      {transition_order(spec, 1.0)}")

# alpha = +1 has a cusp in gamma itself, alpha = 0 a kink and alpha = -1 a
# jump only in the second derivative.

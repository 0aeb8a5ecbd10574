"""
How harmonic is the membrane bath?
==================================

The quartic (Duffing) energy of mode n relative to its harmonic energy is
R_n ~ 4.7e-16 zeta_n nbar^2 for h-BN with strain 1e7 (h/R)^2, whatever
the radius, so nonlinearity is negligible at any realistic occupation.
"""

import numpy as np

from dqptlab import MembraneParams, anharmonicity_ratio, mode_table
from dqptlab.membrane import cross_coupling_matrix

for radius in (1e-6, 5e-6, 25e-6):
    p = MembraneParams.hbn(radius)
    zeta1 = mode_table(p, 1).zeta[0]
    print(f"R = {radius * 1e6:4.0f} um: R_1 / (zeta_1 nbar^2) = {anharmonicity_ratio(p, 1, 1.0) / zeta1:.4e}")

p = MembraneParams.for_fundamental(20e6)
m = mode_table(p, 200)
print("couplings Lambda_n / 2pi (Hz) for n = 1, 2, 10, 100, 200:")
print(np.round(m.coupling[[0, 1, 9, 99, 199]] / 2 / np.pi, 3))

mat = cross_coupling_matrix(p, 20, np.ones(20))
print("largest cross-mode ratio sits at (n, m) =", tuple(int(i) + 1 for i in np.unravel_index(mat.argmax(), mat.shape)))

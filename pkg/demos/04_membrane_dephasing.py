"""
Spin dephasing by a vibrating membrane
======================================

A spin at the centre of a clamped h-BN drum couples to its axisymmetric
modes. The modes are almost equally spaced by Delta, so the coherence
revives partially at multiples of 2 pi / Delta and the decay function has
kinks there, of different character at odd and even multiples.
"""

import numpy as np

from dqptlab import MembraneParams, ThermalState, fid_series, fit_scaling, from_membrane, mode_table

params = MembraneParams.for_fundamental(20e6)
modes = mode_table(params, 20_000)
print(f"R = {params.radius * 1e6:.3f} um, strain = {params.strain:.3e}")
print(f"Omega_1 / 2pi = {modes.omega[0] / 2 / np.pi / 1e6:.3f} MHz, Delta / 2pi = {modes.delta / 2 / np.pi / 1e6:.3f} MHz")

# time in units of 4 pi / Delta; t = 0.5 and t = 1 are the critical times
spec = from_membrane(modes).normalized()
t = np.linspace(0, 1.2, 1201)
cold = fid_series(spec, t)
hot = fid_series(spec, t, ThermalState.from_occupation(10, spec.frequencies[0]))
# couplings of ~160 Hz against MHz modes: the loss of coherence is tiny
for ti in (0.25, 0.5, 0.75, 1.0):
    i = np.searchsorted(t, ti)
    print(f"t = {ti:4.2f}: 1 - rho/rho0 = {1 - cold.coherence[i] / 0.5:.3e} (T=0)  "
          f"{1 - hot.coherence[i] / 0.5:.3e} (n_th=10)")

for t_c in (1.0, 0.5):
    fit = fit_scaling(spec, t_c, (1e-4, 1e-2))
    print(f"Xi at t_c = {t_c}: {fit.exponent:.3f}")
for n_th in (1, 10, 100):
    th = ThermalState.from_occupation(n_th, spec.frequencies[0])
    fit = fit_scaling(spec, 1.0, (1e-4, 1e-2), thermal=th)
    print(f"n_th = {n_th:3d}: Xi = {fit.exponent:.3f}, r2 = {fit.r2_power:.4f}")

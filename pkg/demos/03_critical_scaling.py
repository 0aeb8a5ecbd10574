"""
Critical exponents near a revival
=================================

Close to t_c the excess rate dgamma = |gamma(t_c (1 + tau)) - gamma(t_c)|
follows a power law in tau (a logarithm for alpha = +1), but only for
tau above about 1/N; below that the cosine expansion gives tau^2.
"""

from dqptlab import build_comb_spectrum, fit_scaling, short_time_crossover, size_scaling

spec = {a: build_comb_spectrum(100_000, alpha=a) for a in (1, 0, -1)}

for alpha, s in spec.items():
    fit = fit_scaling(s, 1.0, (1e-4, 1e-2))
    shown = "-" if fit.exponent is None else f"{fit.exponent:.3f}"
    print(f"alpha = {alpha:+d}: {fit.model.value:12s} xi = {shown:6s} "
          f"r2 power {fit.r2_power:.5f}  r2 log {fit.r2_log:.5f}")

c = short_time_crossover(build_comb_spectrum(10_000))
print(f"N = 1e4: tau^{c.inner_exponent:.3f} below tau_break = {c.tau_break:.1e}, "
      f"tau^{c.outer_exponent:.3f} above")

# at fixed tau the rate grows with L until L ~ 1/tau, then saturates
for n, g in size_scaling(0, [10, 100, 1000, 10_000, 100_000], tau=1e-3):
    print(f"L = {n:6d}: gamma = {g:.4e}")

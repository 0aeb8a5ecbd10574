"""
Fisher zeros in complex time
============================

Zeros of gamma(z) line up along curves that pinch onto the real axis at
the critical times. Couplings growing with frequency (larger alpha) pull
the curves closer to the axis.
"""

from dqptlab import build_comb_spectrum, crossing_report, find_fisher_zeros
from dqptlab.fisher import min_axis_distance

region = (0.5, 3.5, -0.1, 0.1)
zeros = find_fisher_zeros(build_comb_spectrum(1000), region)
print(f"{len(zeros)} zeros in Re z in [0.5, 3.5], |Im z| <= 0.1")
for c in crossing_report(zeros, 1e-6):
    if c.crossing:
        print(f"  branch {c.branch}: real zero at t = {c.t_crossing:.9f}")

# distance of the zero curve from the axis between two revivals
window = (0.1, 0.4, -0.02, 0.02)
for alpha in (1, 0, -1):
    z = find_fisher_zeros(build_comb_spectrum(1000, alpha=alpha), window)
    print(f"alpha = {alpha:+d}: min |Im z| = {min_axis_distance(z):.5f}")

"""Where does the ratio criterion switch on for facial Thue list edge colorings?

With d_s = 4s and p_s = k^-s the ratio phi(xi)/xi has a closed form, so we can
sweep k and watch the minimum cross 1. The crossing sits at k* = (11 + 5 sqrt 5)/2,
with the minimizer at the golden ratio; every integer k >= 12 passes.

Run: python demos/facial_threshold.py
"""
import math

import numpy as np

from forestlll.applications import facial_spectrum
from forestlll.criteria import GeometricTail, PowerSpectrum, check_entropy_condition, min_ratio, phi

print(f"{'k':>6} {'rho':>10} {'xi*':>10} {'verdict':>9} {'entropy value':>14}")
for k in (10, 11, 12, 13, 16, 20, 40):
    sp = facial_spectrum(k)
    r = min_ratio(sp)
    ent = check_entropy_condition(sp, k)
    print(f"{k:>6} {r.rho:>10.6f} {r.xi_star:>10.6f} {r.verdict:>9} {ent.value:>14.6f}")

# %% the exact crossing
k_star = (11 + 5 * math.sqrt(5)) / 2
r = min_ratio(PowerSpectrum(tail=GeometricTail(1, 1 / k_star, (0.0, 4.0))))
print(f"\nk* = {k_star:.10f}: rho = {r.rho:.10f}, xi* = {r.xi_star:.10f} (golden ratio {(1 + math.sqrt(5)) / 2:.10f})")

# %% at k = 12 the ratio equals 1 at xi = 3, but the minimum is elsewhere
sp12 = facial_spectrum(12)
xs = np.linspace(0.2, 6, 30)
ratios = [phi(sp12, x) / x for x in xs]
print("\nk = 12, phi(xi)/xi on a coarse grid:")
for x, v in zip(xs[::3], ratios[::3]):
    print(f"  xi = {x:5.2f}   ratio = {v:.4f}")
print(f"  xi = {3.0:5.2f}   ratio = {phi(sp12, 3.0) / 3:.4f}")
print(f"  minimum {min_ratio(sp12).rho:.6f} at xi = {min_ratio(sp12).xi_star:.6f}")

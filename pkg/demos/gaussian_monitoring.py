"""
Monitoring a Gaussian mean without a fixed sample size
======================================================

A stream arrives one observation at a time and we may stop whenever we like.
A nonnegative martingale under the null gives an e-process; from it we read off
an anytime p-value, a level-alpha sequential test and, by inverting over a grid
of null means, a confidence sequence.
"""

# %%
import numpy as np

from avseq import (GaussianIID, GaussianMartingale, e_to_p, e_to_test, make_rng, mixture_cs,
                   mixture_cs_radius)

alpha = 0.05
rng = make_rng(2024)

# %% Under the null the e-process rarely climbs; under a shift it takes off.
null_data = rng.standard_normal(500)
alt_data = rng.standard_normal(500) + 0.25

for label, xs in [("null N(0,1)", null_data), ("shifted N(0.25,1)", alt_data)]:
    e = GaussianMartingale(m=0.0, lam=0.25).run(xs)
    p = e_to_p(e)
    tau = e_to_test(e, alpha)
    print(f"{label:>18}: max e = {e.max():8.2f}   final p = {p[-1]:.4f}   reject at t = {tau}")

# %% The normal-mixture confidence sequence shrinks like sqrt(log t / t).
center, radius = mixture_cs(alt_data, alpha)
for t in (10, 50, 100, 250, 500):
    lo, hi = center[t - 1] - radius[t - 1], center[t - 1] + radius[t - 1]
    print(f"t = {t:3d}: [{lo:+.3f}, {hi:+.3f}]   radius {mixture_cs_radius(t, alpha):.3f}")

# %% Coverage is uniform over time: across many streams the interval
# almost never misses 0 at any t.
paths = make_rng(7).standard_normal((2000, 1000))
S = np.cumsum(paths, axis=1)
t = np.arange(1, 1001)
miss = (np.abs(S / t) > mixture_cs_radius(t, alpha)).any(axis=1)
print(f"ever-miss rate over 1000 steps: {miss.mean():.4f} (target <= {alpha})")

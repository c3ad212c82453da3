"""
Converting between p-values and e-values
========================================

An anytime p-value can be turned into an e-process with any calibrator that
integrates to at most one.  The price is a square root: E[1 v sup sqrt(e)] <= 2.
"""

# %%
import numpy as np

from avseq import (Cdf, RademacherShifted, dyadic_pvalues, make_rng, p_to_e_calibrated,
                   randomize, sample_path, sqrt_calibrator)

f = sqrt_calibrator()
print("calibrator at p = 1, 0.25, 0.01:", [round(float(f(p)), 3) for p in (1, 0.25, 0.01)])

# %% Calibrate the dyadic p-value on Rademacher data; the mean over paths stays near 1.
vals = []
for seed in range(2000):
    xs = sample_path(RademacherShifted(0), 64, seed=seed).xs
    vals.append(p_to_e_calibrated(np.array(dyadic_pvalues(xs), dtype=float))[-1])
print(f"mean calibrated e at t = 64 over 2000 paths: {np.mean(vals):.3f}")

# %% Randomization removes atoms: a discrete statistic becomes exactly uniform.
cdf = Cdf.step([0.0, 1.0], [0.5, 0.5])
rng = make_rng(1)
y = rng.integers(0, 2, 100_000).astype(float)
u = randomize(y, cdf, rng.random(y.size))
print("randomized quartiles:", np.round(np.quantile(u, [0.25, 0.5, 0.75]), 3))

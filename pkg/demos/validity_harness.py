"""
Checking validity by simulation
===============================

Every suite pairs real instruments with deliberately broken controls, so a
green run means the checks can also fail.  Quick mode finishes in seconds.
"""

# %%
from avseq import SUITES, run_suite

for name in SUITES:
    rep = run_suite(name, seed=1, quick=True)
    status = "all pass" if rep.passed else "FAILURES"
    print(f"{name:>18}: {len(rep.checks):3d} checks, {status}")

# %% A closer look at one report.
print(run_suite("stopping-matrix", seed=1, quick=True).summary())

# %% [markdown]
# # When does the weaker firm start to obfuscate?
#
# Two thresholds: the leader quality at which the follower's emission hits
# zero (fixed heterogeneity), and the heterogeneity at which it does
# (fixed qualities).

# %%
import numpy as np

from precision_contest import MarketConfig, make_distribution, make_technology, solve_equilibrium
from precision_contest.equilibrium import critical_heterogeneity, critical_quality

uniform = make_distribution("uniform")

# %% [markdown]
# ## Sweep of the leader quality, ratio ranking, s = 20, follower at 0.1

# %%
cfg = MarketConfig(20.0, dist=uniform, tech=make_technology("ratio"))
for t1 in np.linspace(0.15, 1.0, 8):
    eq = solve_equilibrium(cfg, (t1, 0.1), check_existence=False)
    print(f"theta1={t1:.3f}  rho1={eq.rho1:+.4f}  rho2={eq.rho2:+.4f}  r*={eq.r_star:.4f}")
res = critical_quality(cfg, 0.1)
print(f"critical leader quality {res.value:.4f} (quality ratio {res.spread:.3f})")

# %% [markdown]
# ## Critical heterogeneity at qualities (0.75, 0.25)
#
# For the difference ranking both demand models are shown: `exact` clips
# ranking probabilities to [0, 1] when consumers form expectations,
# `unclamped` integrates the linear rule as is.

# %%
for fam, model in (("ratio", "exact"), ("difference", "exact"), ("difference", "unclamped"),
                   ("piecewise-constant", "exact"), ("noise", "exact")):
    cfg = MarketConfig(10.0, dist=uniform, tech=make_technology(fam), demand_model=model)
    res = critical_heterogeneity(cfg, (0.75, 0.25))
    print(f"{fam:<20} {model:<10} s~ = {res.value:.4f}  (rho2 at s~: {res.residual:.1e})")

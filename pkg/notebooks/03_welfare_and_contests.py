# %% [markdown]
# # Welfare, the regulator's price cap and stand-alone contests

# %%
import numpy as np

from precision_contest import (
    MarketConfig,
    MonomialPrizes,
    PrizeSchedule,
    make_distribution,
    make_technology,
    monomial_prize_equilibrium,
    solve_equilibrium,
    welfare_report,
)
from precision_contest.welfare import consumer_welfare, regulator_cap

cfg = MarketConfig(4.0, dist=make_distribution("uniform"), tech=make_technology("difference"))
eq = solve_equilibrium(cfg, (0.75, 0.25))

# %% [markdown]
# ## Welfare accounts at the difference-ranking equilibrium

# %%
for key, value in welfare_report(cfg, (0.75, 0.25), eq).to_record().items():
    print(f"{key:<16} {value:.5f}")

# %% [markdown]
# Consumer surplus falls as labels get sharper: better information softens
# price competition.

# %%
for r in np.linspace(0.0, 1.0, 6):
    print(f"r={r:.1f}  consumer welfare={consumer_welfare(cfg, r).wC:.5f}")

cap = regulator_cap(cfg, eq.r_star)
print(f"price cap {cap.p_bar:.4f} below market price {cap.p1_market:.4f}: {cap.satisfied}")

# %% [markdown]
# ## Monomial prizes
#
# With `P1 = alpha r**beta`, `P2 = P1 / gamma`, aggregate precision has a
# closed form; the generic solver reproduces it when handed those prizes.

# %%
sched = PrizeSchedule("monomial", alpha=1.0, beta=1.5, gamma=2.0)
# the difference ranking saturates at this precision, so use the ratio form
cfg = MarketConfig(4.0, dist=make_distribution("uniform"), tech=make_technology("ratio"))
for t1 in (0.4, 0.6, 0.8, 1.0):
    r, rho1, rho2 = monomial_prize_equilibrium(cfg.tech, (t1, 0.25), sched)
    num = solve_equilibrium(cfg, (t1, 0.25), prize_fn=MonomialPrizes.function(sched), check_existence=False)
    print(f"theta1={t1:.1f}  r*={r:.4f}  rho1={rho1:.4f}  rho2={rho2:.4f}  numeric r*={num.r_star:.4f}")

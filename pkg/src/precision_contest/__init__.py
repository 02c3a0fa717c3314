"""Equilibrium labelling precision in a duopoly with a contested quality ranking.

Two firms of known quality pay to sharpen or blur a public label that ranks
them; consumers with heterogeneous tastes buy on the label. The package solves
for the firms' information emissions, prices, prizes and welfare.
"""

from .contests import MonomialPrizes, PrizeSchedule, exogenous_prize_equilibrium, monomial_prize_equilibrium
from .demand import DemandExpectations, lambdas, verify_bookkeeping
from .distributions import QualityDistribution, make_distribution, order_statistics
from .equilibrium import (
    Equilibrium,
    ThresholdResult,
    cartel_precision,
    certify_equilibrium,
    critical_heterogeneity,
    critical_quality,
    existence_bound,
    solve_aggregate_precision,
    solve_equilibrium,
)
from .market import MarketConfig, PrizeBundle, prizes, scenario_prizes
from .rankings import FAMILIES, RankingTechnology, make_technology
from .welfare import WelfareReport, welfare_report

__version__ = "0.1.0"

__all__ = [
    "FAMILIES",
    "DemandExpectations",
    "Equilibrium",
    "MarketConfig",
    "MonomialPrizes",
    "PrizeBundle",
    "PrizeSchedule",
    "QualityDistribution",
    "RankingTechnology",
    "ThresholdResult",
    "WelfareReport",
    "cartel_precision",
    "certify_equilibrium",
    "critical_heterogeneity",
    "critical_quality",
    "existence_bound",
    "exogenous_prize_equilibrium",
    "lambdas",
    "make_distribution",
    "make_technology",
    "monomial_prize_equilibrium",
    "order_statistics",
    "prizes",
    "scenario_prizes",
    "solve_aggregate_precision",
    "solve_equilibrium",
    "verify_bookkeeping",
    "welfare_report",
]

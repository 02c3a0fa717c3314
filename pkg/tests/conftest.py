import warnings

import pytest

from precision_contest.distributions import make_distribution
from precision_contest.market import MarketConfig
from precision_contest.rankings import make_technology

# reference scenario of each ranking family: uniform qualities on [0, 1], delta = 1
REFERENCE_S = {"ratio": 30.0, "difference": 4.0, "piecewise-constant": 10.0, "noise": 30.0}
THETA = (0.75, 0.25)
FAMILIES = tuple(REFERENCE_S)


def reference_config(family: str, **overrides) -> MarketConfig:
    kw = dict(s=REFERENCE_S[family], cost_delta=1.0, dist=make_distribution("uniform"),
              tech=make_technology(family))
    kw.update(overrides)
    return MarketConfig(**kw)


@pytest.fixture(params=FAMILIES)
def family(request):
    return request.param


@pytest.fixture
def cfg(family):
    return reference_config(family)


def beta22():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make_distribution("beta", (2.0, 2.0))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

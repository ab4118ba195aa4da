import numpy as np
import pytest

from reservezones.netcore import build_matrices, load_case
from reservezones.scengen import (ProbabilisticForecast, ScenarioSet, fast_forward_reduce,
                                  sample_scenarios)

SMALL_CASES = ("ring4", "congested4", "house5", "mesh6", "grid8")


def reduced_set(net, count=200, seed=11, target=4) -> ScenarioSet:
    scen = sample_scenarios(ProbabilisticForecast.from_network(net), count, seed)
    return fast_forward_reduce(scen, target)


@pytest.fixture(scope="session")
def cases():
    out = {}
    for name in SMALL_CASES + ("rts24",):
        net = load_case(name)
        out[name] = (net, build_matrices(net))
    return out


@pytest.fixture(scope="session")
def ring4(cases):
    return cases["ring4"]


@pytest.fixture(scope="session")
def ring4_scen(ring4):
    return reduced_set(ring4[0])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import settings

from policyeval.mrp import Mrp, random_mrp, two_state_family

settings.register_profile("ci", max_examples=50, deadline=None)
settings.register_profile("dev", max_examples=200, deadline=None)
settings.load_profile("ci")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow tier; pass --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def family():
    return two_state_family(0.9, 1.0)


@pytest.fixture
def permutation_mrp():
    P = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=float)
    return Mrp(P, [1.0, -2.0, 0.5], 0.7, 0.0)


def random_instances(count, seed, dims=(2, 8), gammas=(0.5, 0.9), noise=True, zero_fraction=0.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        d = int(rng.integers(dims[0], dims[1] + 1))
        g = float(rng.choice(gammas))
        s = float(rng.random()) if noise else 0.0
        out.append(random_mrp(rng, d, g, s, zero_fraction=zero_fraction))
    return out


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(line)

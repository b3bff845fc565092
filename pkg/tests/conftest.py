import pytest

from bsi import Topology, shipped_library

# State A is 0, state B is 1 throughout.
GOLDEN_MEAN = Topology.from_edges(2, 2, [(0, 1, 0), (0, 0, 1), (1, 1, 0)], id="golden-mean")
EVEN = Topology.from_edges(2, 2, [(0, 0, 0), (0, 1, 1), (1, 1, 0)], id="even")
IID = Topology.from_edges(1, 2, [(0, 0, 0), (0, 1, 0)], id="iid")
CYCLE = Topology.from_edges(2, 2, [(0, 1, 1), (1, 0, 0)], id="cycle")
# Two-state, four-edge unifilar topologies that fail the minimality filter;
# used as path-tracing fixtures.
FIG_G = Topology.from_edges(2, 2, [(0, 0, 0), (0, 1, 1), (1, 0, 0), (1, 1, 0)], id="fig-g")
FIG_I = Topology.from_edges(2, 2, [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)], id="fig-i")

WORKED_EXAMPLE = "11101100111101111001"


@pytest.fixture(scope="session")
def full_library():
    return shipped_library()


@pytest.fixture(scope="session")
def small_library():
    return shipped_library(2)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

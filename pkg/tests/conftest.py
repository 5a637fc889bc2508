import numpy as np
import pytest
from hypothesis import settings

from bayesplit.graph import InteractionSequence, UndirectedGraph

# pure-function property suites run at least 10^3 cases each
settings.register_profile("thorough", max_examples=1000, deadline=None, derandomize=True)
settings.load_profile("thorough")


def graph_from_edges(n, edges):
    return UndirectedGraph(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2),
                           tuple(str(i) for i in range(n)))


@pytest.fixture
def triangle():
    return graph_from_edges(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def two_triangles():
    return graph_from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


@pytest.fixture
def small_sequence():
    return InteractionSequence.from_pairs([("a", "b"), ("a", "c"), ("b", "a")])


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request, capsys):
    """``acceptance(label, passed, detail)`` records and prints one criterion line."""

    def record(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        request.config.acceptance_lines.append(line)
        with capsys.disabled():
            print("\n" + line)

    return record

import numpy as np
import pytest

from bgwr.dataio import china_graph
from bgwr.spatial_graph import build_graph, graph_distances


# one "criterion N: PASS/FAIL - ..." line per acceptance check, echoed in
# the terminal summary so they survive pytest's output capture
CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def china():
    return china_graph()


@pytest.fixture(scope="session")
def china_d(china):
    return graph_distances(china)


@pytest.fixture(scope="session")
def line_graph():
    """Path graph A-B-C-D, distances 0..3."""
    return build_graph("ABCD", [("A", "B"), ("B", "C"), ("C", "D")])


def random_graph(rng, n):
    """Erdos-Renyi style random graph over string vertex ids."""
    vertices = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.15:
                edges.append((vertices[i], vertices[j]))
    return build_graph(vertices, edges)


def floyd_warshall(g):
    """Independent all-pairs shortest-path oracle."""
    n = g.n
    index = {v: i for i, v in enumerate(g.vertices)}
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for e in g.edges:
        a, b = tuple(e)
        dist[index[a], index[b]] = 1.0
        dist[index[b], index[a]] = 1.0
    for k in range(n):
        dist = np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :])
    return dist

import math
import sys

import numpy as np
import pytest

from dagm.graph import DirectedGraph
from dagm.model import AffiliationMatrices


def random_instance(rng, n_max=30, k_max=4, density=0.2, zero_frac=0.3):
    """Random directed graph plus sparse nonnegative F, H."""
    n = int(rng.integers(3, n_max + 1))
    k = int(rng.integers(1, k_max + 1))
    adj = rng.random((n, n)) < density
    np.fill_diagonal(adj, False)
    g = DirectedGraph.from_edges(n, np.argwhere(adj))
    F = rng.exponential(0.5, (n, k)) * (rng.random((n, k)) > zero_frac)
    H = rng.exponential(0.5, (n, k)) * (rng.random((n, k)) > zero_frac)
    return g, AffiliationMatrices(F, H)


def naive_loglik(g, m, eps=1e-10, excluded=()):
    """Plain double loop over all ordered pairs."""
    edges = g.edges()
    skip = set(excluded)
    total = 0.0
    for u in range(g.node_count):
        for v in range(g.node_count):
            if u == v or (u, v) in skip:
                continue
            d = float(np.dot(m.F[u], m.H[v]))
            if (u, v) in edges:
                total += math.log(-math.expm1(-max(d, eps)))
            else:
                total -= d
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is not None and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)

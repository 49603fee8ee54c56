import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import naive_loglik, random_instance
from dagm.graph import DirectedGraph
from dagm.model import (
    EPS,
    AffiliationMatrices,
    ColumnSumCache,
    discrete_edge_probability,
    edge_probability,
    log_likelihood,
    node_gradient,
    node_objective,
)

# 30-digit mpmath evaluations
ONE_MINUS_INV_E = 0.632120558828557678404476229839
LOG_ONE_MINUS_INV_E = -0.458675145387081891021643645067
INV_E_RATIO = 0.581976706869326424385002005109


def central_difference(fun, x, h=1e-5):
    grad = np.empty_like(x)
    for k in range(len(x)):
        step = np.zeros_like(x)
        step[k] = h
        grad[k] = (fun(x + step) - fun(x - step)) / (2 * h)
    return grad


class TestDiscreteProbability:
    def test_single_community(self):
        assert discrete_edge_probability([0], {0: 0.3}, 10) == pytest.approx(0.3)

    def test_background(self):
        assert discrete_edge_probability([], {}, 100) == 0.01

    def test_two_communities(self):
        assert discrete_edge_probability(["a", "b"], {"a": 0.5, "b": 0.5}, 10) == 0.75

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            discrete_edge_probability([0], [p], 10)

    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=3))
    def test_matches_bernoulli_enumeration(self, probs):
        # P(at least one fires), by enumerating every outcome
        at_least_one = 0.0
        for outcome in itertools.product([0, 1], repeat=len(probs)):
            weight = math.prod(p if o else 1 - p for p, o in zip(probs, outcome))
            if any(outcome):
                at_least_one += weight
        assert discrete_edge_probability(range(len(probs)), probs, 5) == pytest.approx(at_least_one, abs=1e-12)


class TestEdgeProbability:
    def test_zero(self):
        assert edge_probability([0, 0], [1, 1]) == 0.0

    def test_half(self):
        assert edge_probability([math.log(2)], [1.0]) == pytest.approx(0.5, abs=1e-15)

    def test_value(self):
        assert edge_probability([1, 1], [0.5, 0.5]) == pytest.approx(ONE_MINUS_INV_E, rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            edge_probability([1, 1], [1])

    @given(
        arrays(np.float64, 3, elements=st.floats(0, 5)),
        arrays(np.float64, 3, elements=st.floats(0, 5)),
        st.integers(0, 2),
        st.floats(0, 2),
    )
    def test_monotone(self, f, h, k, bump):
        g = f.copy()
        g[k] += bump
        assert edge_probability(g, h) >= edge_probability(f, h)
        assert edge_probability(h, g) >= edge_probability(h, f)


def test_matrices_validate():
    with pytest.raises(ValueError):
        AffiliationMatrices(np.zeros((3, 2)), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        AffiliationMatrices(-np.ones((2, 2)), np.zeros((2, 2)))


class TestLogLikelihood:
    def test_single_edge(self):
        g = DirectedGraph.from_edges(2, [(0, 1)])
        m = AffiliationMatrices([[1.0], [0.0]], [[0.0], [1.0]])
        assert log_likelihood(g, m) == pytest.approx(LOG_ONE_MINUS_INV_E, rel=1e-14)
        assert naive_loglik(g, m) == pytest.approx(LOG_ONE_MINUS_INV_E, rel=1e-14)

    def test_floor_engaged(self):
        g = DirectedGraph.from_edges(4, [(0, 1), (1, 2), (3, 0)])
        m = AffiliationMatrices.zeros(4, 2)
        assert log_likelihood(g, m) == pytest.approx(3 * math.log(-math.expm1(-EPS)), rel=1e-12)

    def test_empty_graph(self, rng):
        g = DirectedGraph.from_edges(5, [])
        m = AffiliationMatrices(rng.random((5, 3)), rng.random((5, 3)))
        expected = -sum(m.F[u] @ m.H[v] for u in range(5) for v in range(5) if u != v)
        assert log_likelihood(g, m) == pytest.approx(expected, rel=1e-12)

    def test_matches_naive_double_loop(self, rng):
        for _ in range(50):
            g, m = random_instance(rng, n_max=60)
            fast = log_likelihood(g, m)
            assert fast == pytest.approx(naive_loglik(g, m), rel=1e-9)

    def test_excluded_pairs_skip_both_sums(self, rng):
        g, m = random_instance(rng, n_max=20)
        n = g.node_count
        pairs = [(0, 1), (1, 0), (2, 0)]
        excl = DirectedGraph.from_edges(n, pairs)
        assert log_likelihood(g, m, excluded=excl) == pytest.approx(naive_loglik(g, m, excluded=pairs), rel=1e-9)

    def test_node_count_mismatch(self):
        with pytest.raises(ValueError):
            log_likelihood(DirectedGraph.from_edges(3, [(0, 1)]), AffiliationMatrices.zeros(2, 1))


class TestNodeObjective:
    def test_isolated_zero_row(self):
        g = DirectedGraph.from_edges(3, [(1, 2)])
        H = np.ones((3, 2))
        assert node_objective(0, np.zeros(2), g, H) == 0.0

    def test_three_node_hand_sum(self):
        g = DirectedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])
        F = np.array([[1.0, 0.5], [0.2, 0.0], [0.0, 2.0]])
        H = np.array([[0.3, 0.3], [1.0, 0.0], [0.5, 1.5]])
        # node 0: edge to 1, non-edge to 2
        expected = math.log(1 - math.exp(-(1.0 * 1.0 + 0.5 * 0.0))) - (1.0 * 0.5 + 0.5 * 1.5)
        assert node_objective(0, F[0], g, H) == pytest.approx(expected, rel=1e-14)
        # H-side of node 0: in-neighbour 2, non-neighbour 1
        expected_h = math.log(1 - math.exp(-(0.0 * 0.3 + 2.0 * 0.3))) - (0.2 * 0.3 + 0.0 * 0.3)
        assert node_objective(0, H[0], g, F, side="H") == pytest.approx(expected_h, rel=1e-14)

    def test_sum_of_node_objectives_is_loglik(self, rng):
        for _ in range(10):
            g, m = random_instance(rng)
            total = sum(node_objective(u, m.F[u], g, m.H) for u in range(g.node_count))
            assert total == pytest.approx(log_likelihood(g, m), rel=1e-12)
            total_h = sum(node_objective(v, m.H[v], g, m.F, side="H") for v in range(g.node_count))
            assert total_h == pytest.approx(log_likelihood(g, m), rel=1e-12)


class TestNodeGradient:
    def test_single_edge(self):
        g = DirectedGraph.from_edges(2, [(0, 1)])
        H = np.array([[0.0], [1.0]])
        grad = node_gradient(0, np.array([1.0]), g, H)
        assert grad[0] == pytest.approx(INV_E_RATIO, rel=1e-14)

    def test_no_neighbours(self, rng):
        g = DirectedGraph.from_edges(4, [(1, 2), (2, 3)])
        H = rng.random((4, 3))
        cache = ColumnSumCache.from_matrices(AffiliationMatrices(np.zeros((4, 3)), H))
        grad = node_gradient(0, rng.random(3), g, H, cache)
        np.testing.assert_allclose(grad, -(H.sum(axis=0) - H[0]), rtol=1e-14)
        assert (grad <= 0).all()

    @pytest.mark.parametrize("side", ["F", "H"])
    def test_finite_differences(self, rng, side):
        worst = 0.0
        for _ in range(20):
            g, m = random_instance(rng, zero_frac=0.0)
            other = m.H if side == "F" else m.F
            u = int(rng.integers(g.node_count))
            x = rng.uniform(0.2, 1.5, m.K)
            grad = node_gradient(u, x, g, other, side=side)
            fd = central_difference(lambda y: node_objective(u, y, g, other, side=side), x)
            worst = max(worst, np.max(np.abs(grad - fd)) / max(np.max(np.abs(fd)), 1e-12))
        assert worst <= 1e-4

    def test_stale_cache_asserts(self):
        g = DirectedGraph.from_edges(2, [(0, 1)])
        H = np.ones((2, 1))
        stale = ColumnSumCache(np.zeros(1), np.zeros(1))
        with pytest.raises(AssertionError):
            node_gradient(0, np.ones(1), g, H, stale)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetlink import heuristics
from hetlink.exceptions import InputError, NumericError
from hetlink.graph import build_graph
from hetlink.heuristics import (PPRConfig, adamic_adar, common_neighbors, heuristic_scores,
                                ppr_pair_scores, ppr_score, ppr_vectors, resource_allocation)
from hetlink.synthgen import TwoFeatureSpec, generate_two_feature_graph
from oracles import common_neighbor_sets, ppr_linear_solve

path3 = build_graph(3, [(0, 1), (1, 2)])


class TestNeighborhood:
    def test_path(self):
        assert common_neighbors(path3, 0, 2) == 1
        assert resource_allocation(path3, 0, 2) == pytest.approx(0.5)
        assert adamic_adar(path3, 0, 2) == pytest.approx(1 / math.log(2))

    def test_disjoint(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        assert common_neighbors(g, 0, 2) == 0
        assert adamic_adar(g, 0, 2) == 0 and resource_allocation(g, 0, 2) == 0

    def test_complete(self):
        g = build_graph(4, list(itertools.combinations(range(4), 2)))
        assert all(common_neighbors(g, u, v) == 2 for u, v in itertools.combinations(range(4), 2))

    def test_two_feature_graph_blind(self):
        g, _, _ = generate_two_feature_graph(TwoFeatureSpec(degree=3, block_size=5))
        assert np.all(heuristic_scores(g, g.edges, "cn") == 0)

    def test_unknown(self):
        with pytest.raises(InputError):
            heuristic_scores(path3, [[0, 1]], "katz")

    @given(st.integers(2, 9), st.integers(0, 10**6))
    @settings(max_examples=30, deadline=None)
    def test_vectorized_matches_sets(self, n, seed):
        rng = np.random.default_rng(seed)
        edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.4]
        g = build_graph(n, edges)
        nb = common_neighbor_sets(n, edges)
        pairs = np.array(list(itertools.permutations(range(n), 2)))
        cn, aa, ra = (heuristic_scores(g, pairs, m) for m in ("cn", "aa", "ra"))
        for k, (u, v) in enumerate(pairs):
            common = nb[u] & nb[v]
            assert cn[k] == len(common)
            assert aa[k] == pytest.approx(sum(1 / math.log(len(nb[w])) for w in common))
            assert ra[k] == pytest.approx(sum(1 / len(nb[w]) for w in common))
            assert cn[k] == heuristic_scores(g, [[v, u]], "cn")[0]

    def test_sparse_path_matches_dense(self, monkeypatch):
        rng = np.random.default_rng(1)
        edges = [e for e in itertools.combinations(range(30), 2) if rng.random() < 0.2]
        g = build_graph(30, edges)
        pairs = rng.integers(0, 30, (200, 2))
        dense = {m: heuristic_scores(g, pairs, m) for m in ("cn", "aa", "ra")}
        monkeypatch.setattr(heuristics, "_DENSE_LIMIT", 0)
        for m, want in dense.items():
            np.testing.assert_allclose(heuristic_scores(g, pairs, m), want, atol=1e-12)


class TestPPR:
    def test_isolated_seed(self):
        g = build_graph(3, [(1, 2)])
        pi = ppr_vectors(g, [0])[0]
        np.testing.assert_allclose(pi, [1.0, 0.0, 0.0])

    def test_two_nodes(self):
        g = build_graph(2, [(0, 1)])
        assert ppr_vectors(g, [0])[0, 1] == pytest.approx(0.85 / 1.85, abs=1e-8)
        assert ppr_score(g, 0, 1) == pytest.approx(2 * 0.85 / 1.85, abs=1e-8)

    def test_matches_linear_solve(self):
        rng = np.random.default_rng(2)
        n = 12
        edges = [(i, (i + 1) % n) for i in range(n)]
        edges += [e for e in itertools.combinations(range(n), 2) if rng.random() < 0.2]
        g = build_graph(n, edges)
        pi = ppr_vectors(g, np.arange(n))
        for s in range(n):
            np.testing.assert_allclose(pi[s], ppr_linear_solve(n, edges, s, 0.15), atol=1e-7)
        np.testing.assert_allclose(pi.sum(axis=1), 1.0, atol=1e-6)

    def test_symmetric_and_cache_route(self):
        rng = np.random.default_rng(3)
        edges = [e for e in itertools.combinations(range(40), 2) if rng.random() < 0.1]
        g = build_graph(40, edges)
        pairs = np.array([[0, 5], [5, 0], [3, 9]])
        few = ppr_pair_scores(g, pairs)
        assert few[0] == few[1]
        many = ppr_pair_scores(g, np.vstack([pairs, rng.integers(0, 40, (30, 2))]))[:3]
        np.testing.assert_allclose(few, many, atol=1e-12)

    def test_config(self):
        with pytest.raises(InputError):
            PPRConfig(alpha=1.0)
        with pytest.raises(NumericError):
            ppr_vectors(build_graph(3, [(0, 1), (1, 2)]), [0], PPRConfig(tol=0.0, max_iter=3))

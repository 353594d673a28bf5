import numpy as np
import pytest

from hetlink.exceptions import InputError, ResourceError
from hetlink.features import FeatureMatrix
from hetlink.similarity import graph_similarity, pair_similarities
from hetlink.synthgen import (SWEEP_INDICES, QuantileGenSpec, ThresholdSpec, TwoFeatureSpec,
                              generate_quantile_graph, generate_quantile_sweep,
                              generate_threshold_graph, generate_two_feature_graph, sweep_indices)


def test_sweep_indices_default():
    assert sweep_indices() == SWEEP_INDICES == (0, 1, 2, 3, 17, 31, 45, 47, 48, 49)


class TestQuantileGraph:
    def test_top_pair(self):
        # four points on a line at distinct angles give six distinct similarities
        X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.2], [0.3, -1.0]])
        fm = FeatureMatrix(X)
        u, v = np.triu_indices(4, 1)
        s = pair_similarities(fm, u, v)
        assert len(set(np.round(s, 12))) == 6
        spec = QuantileGenSpec(n_nodes=4, features=fm, n_quantiles=6, selected_quantiles=(5,), index=5)
        g, _, meta = generate_quantile_graph(spec)
        top = int(np.argmax(s))
        assert g.edges.tolist() == [[u[top], v[top]]]
        assert meta["edge_count"] == 1

    def test_two_percent_edges_and_monotone_K(self):
        spec = QuantileGenSpec(n_nodes=300, n_features=4, seed=0)
        fm, graphs = generate_quantile_sweep(spec)
        want = round(0.02 * 300 * 299 / 2)
        Ks = []
        for g, meta in graphs:
            assert abs(g.n_edges - want) <= 1
            Ks.append(meta["K"])
        assert all(a < b for a, b in zip(Ks, Ks[1:]))
        # oracle: sort every pair similarity and slice it into 50 equal chunks
        u, v = np.triu_indices(300, 1)
        s = np.sort(pair_similarities(fm, u, v))
        for (g, meta), q in zip(graphs, SWEEP_INDICES):
            chunk = s[round(q * len(s) / 50):round((q + 1) * len(s) / 50)]
            assert meta["K"] == pytest.approx(chunk.mean(), abs=1e-3)

    def test_deterministic(self):
        spec = QuantileGenSpec(n_nodes=120, n_features=3, index=2, edge_subsample_rate=0.5, seed=7)
        a, _, _ = generate_quantile_graph(spec)
        b, _, _ = generate_quantile_graph(spec)
        assert np.array_equal(a.edges, b.edges)

    def test_pair_budget(self):
        with pytest.raises(ResourceError):
            generate_quantile_graph(QuantileGenSpec(n_nodes=200, pair_budget=100))

    @pytest.mark.parametrize("kw", [{"n_nodes": 1}, {"index": 50}, {"edge_subsample_rate": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            generate_quantile_graph(QuantileGenSpec(**kw))


class TestTwoFeature:
    def test_zero_degree(self):
        g, _, _ = generate_two_feature_graph(TwoFeatureSpec(degree=0))
        assert g.n_edges == 0

    def test_regular_bipartite(self):
        g, _, blocks = generate_two_feature_graph(TwoFeatureSpec(degree=2, block_size=4))
        assert g.degrees.tolist() == [2] * 8
        assert np.all(blocks[g.edges[:, 0]] != blocks[g.edges[:, 1]])

    def test_antipodal(self):
        g, feats, _ = generate_two_feature_graph(TwoFeatureSpec(degree=3, theta1=0.0, theta2=np.pi))
        assert graph_similarity(feats, g) == pytest.approx(-1.0, abs=1e-12)

    def test_degree_too_large(self):
        with pytest.raises(InputError):
            generate_two_feature_graph(TwoFeatureSpec(degree=5, block_size=4))


class TestThresholdGraph:
    def test_homo_invariant(self):
        g, feats = generate_threshold_graph(ThresholdSpec(M=0.5, n_nodes=60, seed=1))
        a = feats.angles
        assert np.all(np.cos(a[g.edges[:, 0]] - a[g.edges[:, 1]]) >= 0.5)

    def test_extremes(self):
        g, _ = generate_threshold_graph(ThresholdSpec(M=1.0, n_nodes=30, seed=0))
        assert g.n_edges == 0
        g, _ = generate_threshold_graph(ThresholdSpec(M=-1.0, n_nodes=30, seed=0))
        assert g.n_edges == 30 * 29 // 2

    @pytest.mark.parametrize("kw", [{"M": 2.0}, {"M": 0.0, "mode": "x"},
                                    {"M": 0.3, "mode": "gated", "M2": -0.3}])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            generate_threshold_graph(ThresholdSpec(**kw))

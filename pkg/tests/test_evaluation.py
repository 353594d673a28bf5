import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetlink.evaluation import (EvalConfig, EvalReport, RankingTask, bucketize,
                                compare_reports, corruption_negatives, evaluate_scorer,
                                reciprocal_rank, reciprocal_ranks, tercile_bounds, write_buckets_csv,
                                write_diff_csv)
from hetlink.exceptions import DomainError, InputError
from hetlink.features import FeatureMatrix, gaussian_features
from hetlink.graph import build_graph
from oracles import exhaustive_rr

small = st.sampled_from([0.0, 0.1, 0.2, 0.5, 1.0])


class TestReciprocalRank:
    @pytest.mark.parametrize("pos,neg,want", [(0.9, [0.1, 0.2], 1.0), (0.15, [0.1, 0.2], 0.5),
                                              (0.2, [0.2], 2 / 3)])
    def test_examples(self, pos, neg, want):
        assert reciprocal_rank(pos, neg) == pytest.approx(want, abs=1e-15)

    @given(small, st.lists(small, max_size=11))
    def test_matches_exhaustive_ranking(self, pos, neg):
        assert reciprocal_rank(pos, neg) == pytest.approx(exhaustive_rr(pos, neg), abs=1e-15)

    def test_rowwise(self):
        pos = np.array([0.9, 0.15, 0.2])
        neg = np.array([[0.1, 0.2], [0.1, 0.2], [0.2, 0.3]])
        want = [reciprocal_rank(p, n) for p, n in zip(pos, neg)]
        np.testing.assert_allclose(reciprocal_ranks(pos, neg), want)


def _ring(n=60):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)] + [(i, (i + 7) % n) for i in range(n)])


class TestMRR:
    def test_perfect_scorer(self):
        g = _ring()
        task = RankingTask(g, g.edges, 20, seed=0)
        assert task.mrr(lambda p: g.has_edges(p[:, 0], p[:, 1]).astype(float)) == 1.0

    def test_constant_scorer(self):
        g = _ring()
        task = RankingTask(g, g.edges, 1, seed=0)
        assert task.mrr(lambda p: np.zeros(len(p))) == pytest.approx(2 / 3)

    def test_random_scorer(self):
        g = _ring()
        pairs = np.tile(g.edges, (10_000 // g.n_edges + 1, 1))[:10_000]
        task = RankingTask(g, pairs, 9, seed=0)
        rng = np.random.default_rng(0)
        harmonic = sum(1 / r for r in range(1, 11)) / 10
        assert task.mrr(lambda p: rng.random(len(p))) == pytest.approx(harmonic, abs=0.03)

    @given(st.integers(0, 1000))
    @settings(max_examples=10, deadline=None)
    def test_monotone_transform_invariance(self, seed):
        g = _ring(30)
        task = RankingTask(g, g.edges, 15, seed=seed)
        w = np.random.default_rng(seed).normal(size=30)
        base = lambda p: w[p[:, 0]] * w[p[:, 1]]
        assert task.mrr(base) == task.mrr(lambda p: np.exp(3 * base(p)) - 2.0)

    def test_negatives_avoid_known_and_are_order_independent(self):
        g = _ring()
        a = corruption_negatives(g, g.edges, 10, seed=5)
        assert not g.has_edges(a[..., 0].ravel(), a[..., 1].ravel()).any()
        assert np.all(a[..., 0] != a[..., 1])
        # stream k is tied to position k, so a prefix reproduces the same draws
        single = corruption_negatives(g, g.edges[:1], 10, seed=5)
        assert np.array_equal(a[0], single[0])

    def test_corrupt_both(self):
        g = _ring()
        a = corruption_negatives(g, g.edges[:3], 10, seed=0, corrupt="both")
        for (u, v), negs in zip(g.edges[:3], a):
            assert np.all(negs[:5, 0] == u) and np.all(negs[5:, 1] == v)

    def test_empty(self):
        assert np.isnan(RankingTask(_ring(), np.zeros((0, 2)), 5, 0).mrr(lambda p: p[:, 0]))


class TestHits:
    def setup_method(self):
        self.g = _ring()
        self.fm = gaussian_features(60, 2, 0)

    def _hits(self, scorer, **kw):
        cfg = EvalConfig(metric="hits", deg_buckets=1, sim_buckets=1, **kw)
        return evaluate_scorer(scorer, self.g, self.fm, self.g.edges[:9], cfg, self.g).overall

    def test_above_and_below(self):
        edge = lambda p: self.g.has_edges(p[:, 0], p[:, 1]).astype(float)
        assert self._hits(edge, hits_k=5, hits_neg=100) == 1.0
        assert self._hits(lambda p: -edge(p), hits_k=5, hits_neg=100) == 0.0

    def test_vacuous(self):
        assert self._hits(lambda p: np.zeros(len(p)), hits_k=100, hits_neg=100) == 1.0


class TestBuckets:
    def test_terciles_of_degree_example(self):
        assert tercile_bounds([0, 0, 0, 5, 5, 9], 3) == [0.0, 5.0]

    def test_nine_distinct(self):
        rng = np.random.default_rng(0)
        # hub h gets h + 1 leaves and its test partner one more, so the nine
        # test edges have distinct min-degrees
        edges, hubs, nxt = [], list(range(9)), 9
        for h in hubs:
            for _ in range(h + 1):
                edges.append((h, nxt))
                nxt += 1
        tests = np.array([(h, nxt + h) for h in hubs])
        g_train = build_graph(nxt + 9, edges + [(nxt + h, x) for h in hubs for x in range(9, 9 + h + 1)])
        X = rng.normal(size=(nxt + 9, 3))
        a = bucketize(g_train, FeatureMatrix(X), tests, EvalConfig())
        assert a.shape == (3, 3)
        assert np.bincount(a.deg_index, minlength=3).tolist() == [3, 3, 3]
        assert np.bincount(a.sim_index, minlength=3).tolist() == [3, 3, 3]
        assert not a.warnings

    def test_equal_similarity_collapses(self):
        g = _ring(30)
        X = np.tile([1.0, 2.0], (30, 1))
        X[::2] *= -1
        a = bucketize(g, FeatureMatrix(X), g.edges[:12], EvalConfig())
        assert a.shape[1] == 1
        assert any("similarity" in w for w in a.warnings)

    def test_sparse_degree_reduction(self):
        g = _ring(30)
        a = bucketize(g, gaussian_features(30, 2, 0), g.edges[:12], EvalConfig())
        assert any("reduced to 2" in w for w in a.warnings)

    def test_too_few_edges(self):
        g = _ring(30)
        with pytest.raises(DomainError):
            bucketize(g, gaussian_features(30, 2, 0), g.edges[:2], EvalConfig())

    @given(st.lists(st.integers(0, 6), min_size=3, max_size=40), st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_counts_and_bounds(self, degrees, seed):
        rng = np.random.default_rng(seed)
        m = len(degrees)
        # pair k joins hub k to a fresh leaf; hub k gets degrees[k] extra leaves
        edges, nxt = [], 2 * m
        for k, d in enumerate(degrees):
            for _ in range(d):
                edges.append((k, nxt))
                nxt += 1
        g = build_graph(nxt, edges)
        tests = np.array([(k, m + k) for k in range(m)])
        X = rng.normal(size=(nxt, 3))
        a = bucketize(g, FeatureMatrix(X), tests, EvalConfig())
        grid = np.zeros(a.shape, dtype=int)
        np.add.at(grid, (a.deg_index, a.sim_index), 1)
        assert grid.sum() == m
        assert a.deg_bounds == sorted(a.deg_bounds) and a.sim_bounds == sorted(a.sim_bounds)


def _report(values, counts):
    grid = [[{"value": v, "count": c} for v, c in zip(rv, rc)] for rv, rc in zip(values, counts)]
    return EvalReport(metric="mrr", overall=0.5, per_bucket=grid, bucket_edges={})


class TestCompare:
    def setup_method(self):
        self.a = _report([[0.1, 0.2], [0.3, 0.4]], [[1, 2], [3, 4]])
        self.b = _report([[0.5, None], [0.2, 0.1]], [[1, 0], [3, 4]])

    def test_self_is_zero(self):
        assert all(c["diff"] == 0 for row in compare_reports(self.a, self.a) for c in row)

    def test_missing(self):
        assert compare_reports(self.a, self.b)[0][1]["diff"] is None

    def test_antisymmetry(self):
        ab, ba = compare_reports(self.a, self.b), compare_reports(self.b, self.a)
        for ra, rb in zip(ab, ba):
            for x, y in zip(ra, rb):
                assert (x["diff"] is None and y["diff"] is None) or x["diff"] == -y["diff"]

    def test_grid_mismatch(self):
        with pytest.raises(InputError):
            compare_reports(self.a, _report([[0.1]], [[1]]))

    def test_csv_and_json(self, tmp_path):
        write_buckets_csv(self.b, tmp_path / "b.csv")
        assert (tmp_path / "b.csv").read_text().splitlines()[:3] == [
            "deg_bucket,sim_bucket,value,count", "0,0,50.00,1", "0,1,,0"]
        write_diff_csv(compare_reports(self.a, self.b), tmp_path / "d.csv")
        assert "0,1,,2,0" in (tmp_path / "d.csv").read_text()
        self.a.save(tmp_path / "r.json")
        assert EvalReport.load(tmp_path / "r.json") == self.a


def test_eval_config_errors():
    for kw in ({"metric": "auc"}, {"n_neg": 0}, {"corrupt": "first"}):
        with pytest.raises(InputError):
            EvalConfig(**kw)

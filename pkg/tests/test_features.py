import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hetlink.exceptions import DomainError, InputError
from hetlink.features import FeatureMatrix, gaussian_features, load_features, save_features, unit_circle_features
from hetlink.graph import build_graph
from hetlink.similarity import (SimilarityProfile, TaskKind, build_profile, classify_task,
                                graph_similarity, pair_similarities, pair_similarity)
from oracles import centered_cosine

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False, allow_subnormal=False)


class TestFeatureIO:
    def test_binary_round_trip(self, tmp_path):
        fm = FeatureMatrix(np.random.default_rng(3).normal(size=(5, 3)).astype(np.float32))
        save_features(fm, tmp_path / "x.featb")
        back = load_features(tmp_path / "x.featb")
        assert np.array_equal(back.rows, fm.rows)

    def test_text_round_trip(self, tmp_path):
        fm = FeatureMatrix(np.random.default_rng(3).normal(size=(4, 2)))
        save_features(fm, tmp_path / "x.feat")
        np.testing.assert_allclose(load_features(tmp_path / "x.feat").rows, fm.rows, atol=1e-9)

    def test_nan_rejected(self, tmp_path):
        (tmp_path / "x.feat").write_text("feat 1 2\n1.0 nan\n")
        with pytest.raises(InputError):
            load_features(tmp_path / "x.feat")

    def test_row_count_mismatch(self, tmp_path):
        (tmp_path / "x.feat").write_text("feat 3 1\n1\n2\n")
        with pytest.raises(InputError):
            load_features(tmp_path / "x.feat")

    def test_bad_header(self, tmp_path):
        (tmp_path / "x.feat").write_text("features 1 1\n1\n")
        with pytest.raises(InputError):
            load_features(tmp_path / "x.feat")

    def test_truncated_binary(self, tmp_path):
        fm = FeatureMatrix(np.ones((3, 3)))
        save_features(fm, tmp_path / "x.featb")
        data = (tmp_path / "x.featb").read_bytes()
        (tmp_path / "x.featb").write_bytes(data[:-4])
        with pytest.raises(InputError):
            load_features(tmp_path / "x.featb")


class TestGenerators:
    def test_gaussian_deterministic(self):
        assert np.array_equal(gaussian_features(4, 2, 1).rows, gaussian_features(4, 2, 1).rows)

    def test_gaussian_column_means(self):
        assert np.all(np.abs(gaussian_features(100_000, 2, 0).mean) < 0.02)

    def test_single_entry(self):
        fm = gaussian_features(1, 1, 0)
        assert fm.mean[0] == fm.rows[0, 0]
        assert np.all(fm.centered == 0)
        assert np.all(fm.centered_unit == 0)

    @pytest.mark.parametrize("theta,xy", [(0.0, (1.0, 0.0)), (math.pi / 2, (0.0, 1.0)),
                                          (math.pi / 3, (0.5, math.sqrt(3) / 2))])
    def test_unit_circle(self, theta, xy):
        np.testing.assert_allclose(unit_circle_features([theta]).rows[0], xy, atol=1e-15)


class TestSimilarity:
    def test_hand_example(self):
        fm = FeatureMatrix([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        assert pair_similarity(fm, 0, 1) == pytest.approx(-0.8, abs=1e-12)
        assert graph_similarity(fm, build_graph(3, [(0, 1)])) == pytest.approx(-0.8, abs=1e-12)

    def test_identical_and_antipodal(self):
        fm = FeatureMatrix([[1.0, 2.0], [1.0, 2.0], [-1.0, -2.0], [-1.0, -2.0]])
        assert pair_similarity(fm, 0, 1) == pytest.approx(1.0)
        assert pair_similarity(fm, 0, 2) == pytest.approx(-1.0)
        assert graph_similarity(fm, build_graph(4, [(0, 1), (2, 3)])) == pytest.approx(1.0)

    def test_empty_edge_set(self):
        with pytest.raises(DomainError):
            graph_similarity(FeatureMatrix(np.eye(2)), build_graph(2, []))

    def test_out_of_range(self):
        with pytest.raises(InputError):
            pair_similarity(FeatureMatrix(np.eye(2)), 0, 2)

    @given(arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(1, 4)), elements=finite),
           st.floats(0.01, 100))
    def test_symmetry_scale_and_oracle(self, X, c):
        fm, scaled = FeatureMatrix(X), FeatureMatrix(c * X)
        n = X.shape[0]
        u, v = np.triu_indices(n, 1)
        a = pair_similarities(fm, u, v)
        assert np.array_equal(a, pair_similarities(fm, v, u))
        np.testing.assert_allclose(pair_similarities(scaled, u, v), a, atol=1e-9)
        assert np.all(np.abs(a) <= 1.0)
        norms = np.linalg.norm(fm.centered, axis=1)
        for x, y, s in zip(u, v, a):
            if norms[x] > 1e-6 and norms[y] > 1e-6:
                assert s == pytest.approx(centered_cosine(X, x, y), abs=1e-9)


def _profile(pos, neg, eps=0.0):
    return SimilarityProfile(np.sort(pos), np.sort(neg), float(np.mean(pos)), eps)


class TestClassify:
    def test_homophilic(self):
        c = classify_task(_profile([0.6, 0.9], [0.1, 0.3]))
        assert c.kind is TaskKind.HOMOPHILIC and c.M == 0.6

    def test_heterophilic(self):
        c = classify_task(_profile([-0.9, -0.7], [0.2, 0.5]))
        assert c.kind is TaskKind.HETEROPHILIC and c.M == -0.7

    def test_gated(self):
        c = classify_task(_profile([-0.2, 0.2], [-0.8, 0.8]))
        assert c.kind is TaskKind.GATED and (c.M1, c.M2) == (-0.2, 0.2)

    def test_unclassified(self):
        assert classify_task(_profile([0.1, 0.5], [0.2, 0.3])).kind is TaskKind.UNCLASSIFIED

    def test_empty(self):
        with pytest.raises(DomainError):
            classify_task(_profile([0.1], []))

    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=20),
           st.lists(st.floats(-1, 1), min_size=1, max_size=20), st.sampled_from([0.0, 0.05, 0.2]))
    def test_swap_never_both_homophilic(self, pos, neg, eps):
        a = classify_task(_profile(pos, neg, eps)).kind
        b = classify_task(_profile(neg, pos, eps)).kind
        assert not (a is TaskKind.HOMOPHILIC and b is TaskKind.HOMOPHILIC)


class TestProfile:
    def test_complete_graph_has_no_negatives(self):
        g = build_graph(3, [(0, 1), (1, 2), (0, 2)])
        with pytest.raises(DomainError):
            build_profile(FeatureMatrix(np.eye(3)), g, 10)

    def test_zero_variance(self):
        g = build_graph(5, [(0, 1), (2, 3)])
        p = build_profile(FeatureMatrix(np.ones((5, 2))), g, 50, seed=0)
        assert np.all(p.pos_samples == 0) and np.all(p.neg_samples == 0)

    def test_deterministic(self):
        fm = gaussian_features(30, 3, 0)
        g = build_graph(30, [(i, (i * 7) % 30) for i in range(30)])
        a, b = build_profile(fm, g, 200, seed=4), build_profile(fm, g, 200, seed=4)
        assert np.array_equal(a.neg_samples, b.neg_samples) and a.K == b.K
        assert len(a.neg_samples) == 200

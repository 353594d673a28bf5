import numpy as np
import pytest
from sklearn.base import clone

from hetlink import HeuristicScorer, LinkPredictor, TaskClassifier
from hetlink.exceptions import InputError, NotFittedError
from hetlink.graph import build_graph, split_edges, subgraph
from hetlink.synthgen import QuantileGenSpec, generate_quantile_graph


@pytest.fixture(scope="module")
def data():
    g, fm, _ = generate_quantile_graph(QuantileGenSpec(n_nodes=150, n_features=4, index=49))
    split = split_edges(g, seed=0)
    return g, fm, split, subgraph(g, split.train)


class TestLinkPredictor:
    def test_fit_score(self, data):
        g, fm, split, g_train = data
        est = LinkPredictor(encoder="sage", decoder="distmult", hidden=8, epochs=30,
                            learning_rate=0.01, eval_every=10)
        assert est.fit(g_train, fm.rows, valid_edges=split.valid, known=g) is est
        assert est.transform().shape == (150, 8)
        s = est.decision_function(split.test)
        assert s.shape == (len(split.test),)
        assert set(np.unique(est.predict(split.test))) <= {0, 1}
        mrr = est.score(split.test, known=g, n_neg=50)
        assert 0 < mrr <= 1

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            LinkPredictor().decision_function([[0, 1]])

    def test_params_and_clone(self):
        est = LinkPredictor(hidden=16, seed=4)
        assert est.get_params()["hidden"] == 16
        assert clone(est).get_params() == est.get_params()

    def test_validation(self, data):
        g, fm, _, _ = data
        with pytest.raises(InputError):
            LinkPredictor().fit(g, fm.rows[:-1])
        with pytest.raises(InputError):
            LinkPredictor(encoder="gat").fit(g, fm.rows)
        est = LinkPredictor(decoder="dot", encoder="nognn", epochs=1).fit(g, fm.rows)
        with pytest.raises(InputError):
            est.decision_function([[0, 150]])


class TestHeuristicScorer:
    def test_fit_score(self, data):
        g, _, split, g_train = data
        est = HeuristicScorer("ra").fit(g_train)
        assert est.decision_function([[0, 1]]).shape == (1,)
        assert 0 < est.score(split.test, known=g, n_neg=50) <= 1

    def test_unknown(self):
        with pytest.raises(InputError):
            HeuristicScorer("katz").fit(build_graph(2, [(0, 1)]))


def test_task_classifier(data):
    g, fm, _, _ = data
    clf = TaskClassifier(n_neg_samples=2000).fit(g, fm)
    assert clf.predict() == "Homophilic"
    assert clf.K_ > 0.5

"""scikit-learn style wrappers: a trainable link predictor, heuristic scorers
and a similarity-based task classifier."""
import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_edge_array, check_features, check_graph, check_is_fitted
from .evaluation import RankingTask
from .graph import EdgeSplit
from .heuristics import heuristic_scores
from .model import ModelSpec, encode, init_params, score_embeddings
from .similarity import build_profile, classify_task
from .training import TrainConfig, train


class LinkPredictor(BaseEstimator):
    """Encoder/decoder link predictor trained on the edges of one graph.

    fit() treats every edge of `graph` as a training positive. Scores are
    real-valued; predict() applies the sign convention (score >= 0 is an edge).
    """

    def __init__(self, encoder="sage", decoder="mlp", layers=2, hidden=64,
                 embed_dim=None, powers=2, mlp_hidden=None, loss="logistic",
                 epochs=200, learning_rate=1e-3, optimizer="adam", k_neg=1,
                 l2_weight=0.0, eval_every=10, val_n_neg=100, seed=0):
        self.encoder = encoder
        self.decoder = decoder
        self.layers = layers
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.powers = powers
        self.mlp_hidden = mlp_hidden
        self.loss = loss
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.k_neg = k_neg
        self.l2_weight = l2_weight
        self.eval_every = eval_every
        self.val_n_neg = val_n_neg
        self.seed = seed

    def _spec(self):
        return ModelSpec(encoder=self.encoder, decoder=self.decoder, layers=self.layers,
                         hidden=self.hidden, embed_dim=self.embed_dim, powers=self.powers,
                         mlp_hidden=self.mlp_hidden)

    def _train_config(self):
        return TrainConfig(loss=self.loss, epochs=self.epochs, learning_rate=self.learning_rate,
                           optimizer=self.optimizer, k_neg=self.k_neg, l2_weight=self.l2_weight,
                           seed=self.seed, eval_every=self.eval_every, val_n_neg=self.val_n_neg)

    def fit(self, graph, X, valid_edges=None, known=None):
        fm = check_features(X)
        g = check_graph(graph, fm.n)
        valid = check_edge_array(valid_edges if valid_edges is not None else [], g.n_nodes)
        spec = self._spec()
        params = init_params(spec, fm.dim, seed=self.seed)
        split = EdgeSplit(train=g.edges, valid=valid, test=np.zeros((0, 2), dtype=np.int64),
                          ratio=(1.0, 0.0, 0.0))
        self.trace_ = train(spec, params, g, fm.rows, split, self._train_config(), known=known)
        self.spec_, self.params_, self.graph_, self.features_ = spec, params, g, fm
        self.n_features_in_ = fm.dim
        return self

    def transform(self, X=None):
        """Node embeddings of the fitted graph (optionally with new features)."""
        check_is_fitted(self, ["params_"])
        fm = self.features_ if X is None else check_features(X, self.graph_.n_nodes)
        return encode(self.spec_, self.params_, self.graph_, fm.rows)

    def decision_function(self, pairs):
        check_is_fitted(self, ["params_"])
        pairs = check_edge_array(pairs, self.graph_.n_nodes)
        return score_embeddings(self.spec_, self.params_, self.transform(), pairs)

    def predict(self, pairs):
        return (self.decision_function(pairs) >= 0).astype(np.int64)

    def score(self, pairs, known=None, n_neg=1000, seed=0):
        """Mean reciprocal rank of `pairs` against corruption negatives."""
        check_is_fitted(self, ["params_"])
        pairs = check_edge_array(pairs, self.graph_.n_nodes)
        task = RankingTask(known if known is not None else self.graph_, pairs, n_neg, seed)
        return task.mrr(self.decision_function)


class HeuristicScorer(BaseEstimator):
    """Common neighbors, Adamic-Adar, resource allocation or PPR over a graph."""

    def __init__(self, method="cn"):
        self.method = method

    def fit(self, graph, X=None, n_nodes=None):
        self.graph_ = check_graph(graph, n_nodes)
        heuristic_scores(self.graph_, np.zeros((0, 2), dtype=np.int64), self.method)
        return self

    def decision_function(self, pairs):
        check_is_fitted(self, ["graph_"])
        return heuristic_scores(self.graph_, check_edge_array(pairs, self.graph_.n_nodes),
                                self.method)

    def score(self, pairs, known=None, n_neg=1000, seed=0):
        check_is_fitted(self, ["graph_"])
        pairs = check_edge_array(pairs, self.graph_.n_nodes)
        task = RankingTask(known if known is not None else self.graph_, pairs, n_neg, seed)
        return task.mrr(self.decision_function)


class TaskClassifier(BaseEstimator):
    """Classifies a graph + features as homophilic, heterophilic, gated or
    unclassified from edge vs non-edge similarity quantiles."""

    def __init__(self, epsilon=0.05, n_neg_samples=10000, seed=0):
        self.epsilon = epsilon
        self.n_neg_samples = n_neg_samples
        self.seed = seed

    def fit(self, graph, X):
        fm = check_features(X)
        g = check_graph(graph, fm.n)
        self.profile_ = build_profile(fm, g, n_neg_samples=self.n_neg_samples,
                                      seed=self.seed, epsilon=self.epsilon)
        self.classification_ = classify_task(self.profile_)
        self.kind_ = self.classification_.kind
        self.K_ = self.profile_.K
        return self

    def predict(self, graph=None, X=None):
        if graph is not None:
            self.fit(graph, X)
        check_is_fitted(self, ["kind_"])
        return self.kind_

"""Argument checks shared by the estimator wrappers."""
import numpy as np

from .exceptions import InputError, NotFittedError
from .features import FeatureMatrix, UnitCircleFeatures, as_feature_matrix
from .graph import Graph, build_graph


def check_graph(graph, n_nodes=None):
    """Accept a Graph or an (m, 2) edge array; `n_nodes` is required for arrays."""
    if isinstance(graph, Graph):
        g = graph
    else:
        edges = np.asarray(graph)
        if n_nodes is None:
            raise InputError("n_nodes is needed to build a graph from an edge array")
        g = build_graph(n_nodes, edges)
    if n_nodes is not None and g.n_nodes != n_nodes:
        raise InputError(f"graph has {g.n_nodes} nodes, expected {n_nodes}")
    return g


def check_features(X, n_nodes=None):
    if isinstance(X, UnitCircleFeatures):
        X = X.to_matrix()
    fm = X if isinstance(X, FeatureMatrix) else as_feature_matrix(X)
    if n_nodes is not None and fm.n != n_nodes:
        raise InputError(f"features have {fm.n} rows, graph has {n_nodes} nodes")
    return fm


def check_edge_array(pairs, n_nodes):
    pairs = np.asarray(pairs)
    if pairs.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise InputError(f"pairs must have shape (m, 2), got {pairs.shape}")
    if not np.issubdtype(pairs.dtype, np.integer):
        if not np.all(np.equal(np.mod(pairs, 1), 0)):
            raise InputError("pair entries must be integer node ids")
    pairs = pairs.astype(np.int64)
    if pairs.min() < 0 or pairs.max() >= n_nodes:
        raise InputError("pair node id out of range")
    return pairs


def check_is_fitted(estimator, attributes):
    missing = [a for a in attributes if not hasattr(estimator, a)]
    if missing:
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")

"""Link prediction on feature-homophilic, heterophilic and gated graphs."""
from .exceptions import (DomainError, HetlinkError, InputError, NotFittedError,
                         NumericError, ResourceError)
from .features import FeatureMatrix, gaussian_features, load_features, save_features
from .graph import Graph, build_graph, load_graph, save_graph, split_edges
from .model import ModelSpec, init_params
from .similarity import TaskKind, build_profile, classify_task, graph_similarity
from .training import TrainConfig, train
from .evaluation import EvalConfig, EvalReport, compare_reports, evaluate_model
from .estimators import HeuristicScorer, LinkPredictor, TaskClassifier

__version__ = "0.1.0"

__all__ = [
    "DomainError", "EvalConfig", "EvalReport", "FeatureMatrix", "Graph", "HetlinkError", "HeuristicScorer",
    "InputError", "LinkPredictor", "ModelSpec", "NotFittedError", "NumericError", "ResourceError",
    "TaskClassifier", "TaskKind", "TrainConfig", "build_graph", "build_profile", "classify_task",
    "compare_reports", "evaluate_model", "gaussian_features", "graph_similarity",
    "init_params", "load_features", "load_graph", "save_features", "save_graph",
    "split_edges", "train",
]

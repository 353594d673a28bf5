"""Mean-centered cosine similarity, graph similarity K, and the
positive/negative similarity profile used to classify a link prediction task."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DomainError, InputError
from .features import as_feature_matrix

DEFAULT_EPSILON = 0.05
POS_SAMPLE_CAP = 1_000_000


class TaskKind(str, Enum):
    HOMOPHILIC = "Homophilic"
    HETEROPHILIC = "Heterophilic"
    GATED = "Gated"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class SimilarityProfile:
    pos_samples: np.ndarray
    neg_samples: np.ndarray
    K: float
    epsilon: float = DEFAULT_EPSILON


@dataclass(frozen=True)
class TaskClassification:
    kind: TaskKind
    M: float | None = None
    M1: float | None = None
    M2: float | None = None

    def to_dict(self):
        return {"kind": self.kind.value, "M": self.M, "M1": self.M1, "M2": self.M2}


def pair_similarities(fm, u, v):
    """Vectorized k(u, v) over index arrays."""
    fm = as_feature_matrix(fm)
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= fm.n):
        raise InputError("node id out of range")
    cu = fm.centered_unit
    s = np.einsum("ij,ij->i", cu[u.ravel()], cu[v.ravel()]).reshape(u.shape)
    return np.clip(s, -1.0, 1.0)


def pair_similarity(fm, u, v):
    return float(pair_similarities(fm, np.array([u]), np.array([v]))[0])


def graph_similarity(fm, g):
    if g.n_edges == 0:
        raise DomainError("graph similarity is undefined on an empty edge set")
    return float(pair_similarities(fm, g.edges[:, 0], g.edges[:, 1]).mean())


def sample_non_edges(g, n_samples, rng, max_rounds=1000):
    """Uniform random node pairs, rejecting self-pairs and edges."""
    n = g.n_nodes
    if n < 2 or n * (n - 1) // 2 - g.n_edges <= 0:
        raise DomainError("graph has no non-edges to sample")
    out_u, out_v, have = [], [], 0
    for _ in range(max_rounds):
        need = n_samples - have
        if need <= 0:
            break
        batch = max(2 * need, 16)
        u = rng.integers(0, n, batch)
        v = rng.integers(0, n, batch)
        keep = (u != v) & ~g.has_edges(u, v)
        u, v = u[keep][:need], v[keep][:need]
        out_u.append(u)
        out_v.append(v)
        have += len(u)
    if have < n_samples:
        raise DomainError("could not sample enough non-edges")
    return np.column_stack([np.concatenate(out_u), np.concatenate(out_v)])


def build_profile(fm, g, n_neg_samples=10000, seed=0, epsilon=DEFAULT_EPSILON,
                  pos_cap=POS_SAMPLE_CAP):
    if n_neg_samples < 1:
        raise InputError("n_neg_samples must be >= 1")
    fm = as_feature_matrix(fm)
    rng = np.random.default_rng(seed)
    neg = sample_non_edges(g, n_neg_samples, rng)
    pos_all = pair_similarities(fm, g.edges[:, 0], g.edges[:, 1])
    K = float(pos_all.mean()) if len(pos_all) else float("nan")
    pos = pos_all
    if len(pos_all) > pos_cap:
        pos = pos_all[rng.choice(len(pos_all), pos_cap, replace=False)]
    neg_s = pair_similarities(fm, neg[:, 0], neg[:, 1])
    return SimilarityProfile(np.sort(pos), np.sort(neg_s), K, epsilon)


def _q(samples, p):
    return float(np.quantile(samples, p, method="inverted_cdf"))


def classify_task(profile):
    pos, neg, eps = profile.pos_samples, profile.neg_samples, profile.epsilon
    if len(pos) == 0 or len(neg) == 0:
        raise DomainError("classification needs non-empty positive and negative samples")
    if not 0 <= eps < 0.5:
        raise InputError("epsilon must lie in [0, 0.5)")
    pos_lo, pos_hi = _q(pos, eps), _q(pos, 1 - eps)
    neg_lo, neg_hi = _q(neg, eps), _q(neg, 1 - eps)
    if pos_lo > neg_hi:
        return TaskClassification(TaskKind.HOMOPHILIC, M=pos_lo)
    if pos_hi < neg_lo:
        return TaskClassification(TaskKind.HETEROPHILIC, M=pos_hi)
    below = np.mean(neg < pos_lo)
    above = np.mean(neg > pos_hi)
    if below > eps and above > eps:
        return TaskClassification(TaskKind.GATED, M1=pos_lo, M2=pos_hi)
    return TaskClassification(TaskKind.UNCLASSIFIED)


def histogram(samples, bins=64):
    counts, edges = np.histogram(samples, bins=bins, range=(-1.0, 1.0))
    return counts, edges

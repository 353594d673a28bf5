"""Feature-agnostic link scores over the training graph."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import InputError, NumericError

_DENSE_LIMIT = 5000


@dataclass(frozen=True)
class PPRConfig:
    alpha: float = 0.15
    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError("teleport alpha must lie in (0, 1)")


def _common(g, u, v):
    a, b = g.neighbors(u), g.neighbors(v)
    return np.intersect1d(a, b, assume_unique=True)


def common_neighbors(g, u, v):
    return int(len(_common(g, u, v)))


def adamic_adar(g, u, v):
    w = _common(g, u, v)
    return float(np.sum(1.0 / np.log(g.degrees[w])))


def resource_allocation(g, u, v):
    w = _common(g, u, v)
    return float(np.sum(1.0 / g.degrees[w]))


def _weighted_common(g, pairs, weights):
    """sum over common neighbors w of weights[w], for many pairs at once."""
    A = g.adjacency
    AW = (A @ sp.diags(weights)).tocsr()
    u, v = pairs[:, 0], pairs[:, 1]
    return np.asarray(AW[u].multiply(A[v]).sum(axis=1)).ravel()


def heuristic_scores(g, pairs, method):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    deg = g.degrees.astype(np.float64)
    if method == "cn":
        weights = np.ones(g.n_nodes)
    elif method == "ra":
        weights = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    elif method == "aa":
        # common neighbors always have degree >= 2
        logs = np.log(deg, out=np.zeros_like(deg), where=deg > 1)
        weights = np.divide(1.0, logs, out=np.zeros_like(deg), where=deg > 1)
    elif method == "ppr":
        return ppr_pair_scores(g, pairs)
    else:
        raise InputError(f"unknown heuristic {method!r}")
    if g.n_nodes <= _DENSE_LIMIT:
        A = g.adjacency
        S = (A @ sp.diags(weights) @ A).toarray()
        return S[pairs[:, 0], pairs[:, 1]]
    out = np.empty(len(pairs))
    step = 200_000
    for s in range(0, len(pairs), step):
        out[s:s + step] = _weighted_common(g, pairs[s:s + step], weights)
    return out


def _transition(g):
    deg = g.degrees.astype(np.float64)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return (sp.diags(inv) @ g.adjacency).tocsr(), deg == 0


def ppr_vectors(g, seeds, cfg=PPRConfig()):
    """Rows are personalized PageRank vectors pi_s = alpha e_s + (1 - alpha) W^T pi_s,
    with mass at dangling nodes returned to the seed."""
    seeds = np.asarray(seeds, dtype=np.int64)
    W, dangling = _transition(g)
    E = np.zeros((len(seeds), g.n_nodes))
    E[np.arange(len(seeds)), seeds] = 1.0
    pi = E.copy()
    for _ in range(cfg.max_iter):
        stuck = pi[:, dangling].sum(axis=1)
        new = cfg.alpha * E + (1 - cfg.alpha) * (np.asarray(W.T @ pi.T).T + stuck[:, None] * E)
        change = np.abs(new - pi).sum(axis=1).max() if len(seeds) else 0.0
        pi = new
        if change < cfg.tol:
            return pi
    raise NumericError(f"PPR did not converge in {cfg.max_iter} iterations")


def ppr_score(g, u, v, cfg=PPRConfig()):
    pi = ppr_vectors(g, [u, v], cfg)
    return float(pi[0, v] + pi[1, u])


class PPRCache:
    """Lazily computed PPR rows keyed by seed node."""

    def __init__(self, g, cfg=PPRConfig()):
        self.g, self.cfg = g, cfg
        self._rows = {}

    def rows(self, seeds):
        seeds = np.asarray(seeds, dtype=np.int64)
        missing = [s for s in np.unique(seeds) if s not in self._rows]
        if missing:
            block = ppr_vectors(self.g, missing, self.cfg)
            for s, row in zip(missing, block):
                self._rows[int(s)] = row
        return self._rows

    def score(self, pairs):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        rows = self.rows(pairs.ravel())
        return np.array([rows[u][v] + rows[v][u] for u, v in pairs])


def ppr_pair_scores(g, pairs, cfg=PPRConfig()):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return np.zeros(0)
    if len(np.unique(pairs)) > g.n_nodes // 4:
        pi = ppr_vectors(g, np.arange(g.n_nodes), cfg)
        return pi[pairs[:, 0], pairs[:, 1]] + pi[pairs[:, 1], pairs[:, 0]]
    return PPRCache(g, cfg).score(pairs)

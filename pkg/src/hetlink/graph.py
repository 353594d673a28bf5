"""Undirected simple graph in compressed adjacency form, edge splits and
the sparse propagation operators used by the encoders."""
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .exceptions import InputError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Graph:
    n_nodes: int
    edges: np.ndarray  # (m, 2) int64, u < v, sorted lexicographically
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray
    n_dropped_self_loops: int = 0

    @property
    def n_edges(self):
        return len(self.edges)

    def neighbors(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @cached_property
    def adjacency(self):
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr),
                             shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def edge_keys(self):
        """Sorted int64 keys u * n + v for canonical edges, for membership tests."""
        return self.edges[:, 0] * self.n_nodes + self.edges[:, 1]

    def has_edges(self, u, v):
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        keys = np.minimum(u, v) * self.n_nodes + np.maximum(u, v)
        pos = np.searchsorted(self.edge_keys, keys)
        pos = np.minimum(pos, max(len(self.edge_keys) - 1, 0))
        if len(self.edge_keys) == 0:
            return np.zeros(keys.shape, dtype=bool)
        return self.edge_keys[pos] == keys

    @cached_property
    def gcn_operator(self):
        """D~^{-1/2} (A + I) D~^{-1/2} as a sparse matrix (D~ = D + I)."""
        inv_sqrt = 1.0 / np.sqrt(self.degrees + 1.0)
        a_tilde = self.adjacency + sp.identity(self.n_nodes, format="csr")
        scale = sp.diags(inv_sqrt)
        return (scale @ a_tilde @ scale).tocsr()

    @cached_property
    def mean_operator(self):
        """Row-normalized adjacency; isolated nodes get an all-zero row."""
        inv = np.zeros(self.n_nodes)
        nz = self.degrees > 0
        inv[nz] = 1.0 / self.degrees[nz]
        return (sp.diags(inv) @ self.adjacency).tocsr()

    @cached_property
    def selfloop_mean_operator(self):
        a_tilde = self.adjacency + sp.identity(self.n_nodes, format="csr")
        return (sp.diags(1.0 / (self.degrees + 1.0)) @ a_tilde).tocsr()


@dataclass(frozen=True)
class EdgeSplit:
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    ratio: tuple = field(default=(0.8, 0.1, 0.1))


def _as_pairs(edge_list):
    arr = np.asarray(edge_list, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"edge list must have shape (m, 2), got {arr.shape}")
    return arr


def build_graph(n_nodes, edge_list):
    """Canonicalize, deduplicate and drop self-loops; returns an immutable Graph."""
    n_nodes = int(n_nodes)
    if n_nodes < 0:
        raise InputError("n_nodes must be non-negative")
    pairs = _as_pairs(edge_list)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= n_nodes):
        raise InputError(f"edge endpoint out of range for n_nodes={n_nodes}")

    loops = pairs[:, 0] == pairs[:, 1]
    n_loops = int(loops.sum())
    if n_loops:
        log.warning("dropped %d self-loop(s)", n_loops)
    pairs = pairs[~loops]
    canon = np.sort(pairs, axis=1)
    if len(canon):
        canon = np.unique(canon, axis=0)

    both = np.concatenate([canon, canon[:, ::-1]]) if len(canon) else canon
    order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else np.zeros(0, dtype=np.int64)
    both = both[order]
    degrees = np.bincount(both[:, 0], minlength=n_nodes).astype(np.int64) if len(both) \
        else np.zeros(n_nodes, dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(degrees)]).astype(np.int64)
    indices = both[:, 1].astype(np.int64) if len(both) else np.zeros(0, dtype=np.int64)
    return Graph(n_nodes, canon, indptr, indices, degrees, n_loops)


def split_edges(g, ratio=(0.8, 0.1, 0.1), seed=0):
    ratio = tuple(float(r) for r in ratio)
    if len(ratio) != 3 or min(ratio) < 0 or abs(sum(ratio) - 1.0) > 1e-9:
        raise InputError(f"invalid split ratio {ratio}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.n_edges)
    m = g.n_edges
    n_valid = int(np.floor(ratio[1] * m + 1e-9))
    n_test = int(np.floor(ratio[2] * m + 1e-9))
    n_train = m - n_valid - n_test
    shuffled = g.edges[perm]
    return EdgeSplit(
        train=shuffled[:n_train],
        valid=shuffled[n_train:n_train + n_valid],
        test=shuffled[n_train + n_valid:],
        ratio=ratio,
    )


def subgraph(g, edges):
    """Graph on the same node set restricted to `edges`."""
    return build_graph(g.n_nodes, edges)


def _check_rows(g, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != g.n_nodes:
        raise InputError(f"expected {g.n_nodes} rows, got array of shape {X.shape}")
    return X


def normalized_adjacency_apply(g, X):
    return g.gcn_operator @ _check_rows(g, X)


def mean_neighbor_apply(g, X):
    return g.mean_operator @ _check_rows(g, X)


def selfloop_mean_apply(g, X):
    return g.selfloop_mean_operator @ _check_rows(g, X)


def _parse_int(token, path, lineno):
    try:
        return int(token)
    except ValueError:
        raise InputError(f"{path}:{lineno}: not an integer: {token!r}") from None


def load_graph(path):
    n_nodes = None
    edges = []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n_nodes is None:
                if len(parts) != 2 or parts[0] != "nodes":
                    raise InputError(f"{path}:{lineno}: expected header 'nodes <n>'")
                n_nodes = _parse_int(parts[1], path, lineno)
                continue
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected '<u> <v>'")
            edges.append((_parse_int(parts[0], path, lineno), _parse_int(parts[1], path, lineno)))
    if n_nodes is None:
        raise InputError(f"{path}: missing header")
    return build_graph(n_nodes, edges)


def save_graph(g, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"nodes {g.n_nodes}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")

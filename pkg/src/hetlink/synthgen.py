"""Synthetic graphs: similarity-quantile wiring over a fixed feature set, plus
the small constructions used by the theory checks."""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, ResourceError
from .features import (FeatureMatrix, UnitCircleFeatures, as_feature_matrix,
                       gaussian_features, load_features)
from .graph import build_graph
from .similarity import graph_similarity

DEFAULT_N_NODES = 2000
DEFAULT_PAIR_BUDGET = 50_000_000
SWEEP_INDICES = (0, 1, 2, 3, 17, 31, 45, 47, 48, 49)

_HIST_BINS = 1 << 20
_CHUNK_PAIRS = 4_000_000


def sweep_indices(n_quantiles=50, n_extreme=3, n_between=4):
    """Extremes at both ends plus `n_between` equispaced interior indices.

    The defaults reproduce SWEEP_INDICES: interior points run from 3 to 45.
    """
    lo = n_extreme
    hi = n_quantiles - n_extreme - 2
    mid = np.rint(np.linspace(lo, hi, n_between)).astype(int) if n_between else []
    return (tuple(range(n_extreme)) + tuple(int(i) for i in mid)
            + tuple(range(n_quantiles - n_extreme, n_quantiles)))


@dataclass
class QuantileGenSpec:
    n_nodes: int = DEFAULT_N_NODES
    n_features: int = 8
    feature_seed: int = 0
    feature_path: str | None = None
    features: FeatureMatrix | None = None
    n_quantiles: int = 50
    selected_quantiles: tuple = SWEEP_INDICES
    index: int = 0
    edge_subsample_rate: float = 1.0
    seed: int = 0
    pair_budget: int = DEFAULT_PAIR_BUDGET

    def validate(self):
        if self.n_nodes < 2:
            raise InputError("n_nodes must be >= 2")
        if self.n_quantiles < 1:
            raise InputError("n_quantiles must be >= 1")
        for q in tuple(self.selected_quantiles) + (self.index,):
            if not 0 <= q < self.n_quantiles:
                raise InputError(f"quantile index {q} outside [0, {self.n_quantiles})")
        if not 0 < self.edge_subsample_rate <= 1:
            raise InputError("edge_subsample_rate must lie in (0, 1]")

    def resolve_features(self):
        if self.features is not None:
            fm = as_feature_matrix(self.features)
        elif self.feature_path is not None:
            fm = load_features(self.feature_path)
        else:
            fm = gaussian_features(self.n_nodes, self.n_features, self.feature_seed)
        if fm.n != self.n_nodes:
            raise InputError(f"feature rows ({fm.n}) != n_nodes ({self.n_nodes})")
        return fm


def _pair_chunks(unit):
    """Yield (u, v, k(u, v)) over all pairs u < v in lexicographic order."""
    n = unit.shape[0]
    start = 0
    while start < n - 1:
        stop = start + 1
        count = n - 1 - start
        while stop < n - 1 and count + (n - 1 - stop) <= _CHUNK_PAIRS:
            count += n - 1 - stop
            stop += 1
        block = np.clip(unit[start:stop] @ unit.T, -1.0, 1.0)
        rows = np.arange(start, stop)
        lens = n - 1 - rows
        u = np.repeat(rows, lens)
        offs = np.arange(len(u)) - np.repeat(np.cumsum(lens) - lens, lens)
        v = u + 1 + offs
        yield u, v, block[u - start, v]
        start = stop


def quantile_boundaries(fm, n_quantiles=50, pair_budget=DEFAULT_PAIR_BUDGET):
    """Exact order-statistic boundaries of the all-pairs similarity distribution.

    Returns an array b of length n_quantiles + 1 with b[0] = -inf and
    b[-1] = +inf; quantile j holds the pairs with b[j] <= k < b[j+1].
    Boundary j is the similarity at ascending rank floor(j * N / n_quantiles).
    """
    fm = as_feature_matrix(fm)
    n = fm.n
    n_pairs = n * (n - 1) // 2
    if n_pairs > pair_budget:
        raise ResourceError(
            f"{n_pairs} node pairs exceed the pair budget {pair_budget}; lower n_nodes")
    unit = fm.centered_unit
    ranks = [(j * n_pairs) // n_quantiles for j in range(1, n_quantiles)]

    counts = np.zeros(_HIST_BINS, dtype=np.int64)
    for _, _, s in _pair_chunks(unit):
        counts += np.bincount(_bin_of(s), minlength=_HIST_BINS)
    cum = np.cumsum(counts)
    bins = np.searchsorted(cum, np.array(ranks) + 1)
    wanted = np.unique(bins)
    collected = {b: [] for b in wanted}
    for _, _, s in _pair_chunks(unit):
        sb = _bin_of(s)
        hit = np.isin(sb, wanted)
        for b in np.unique(sb[hit]):
            collected[b].append(s[sb == b])
    inner = []
    for r, b in zip(ranks, bins):
        vals = np.sort(np.concatenate(collected[b]))
        before = cum[b] - counts[b]
        inner.append(vals[r - before])
    return np.concatenate([[-np.inf], inner, [np.inf]])


def _bin_of(s):
    idx = ((s + 1.0) * (_HIST_BINS / 2.0)).astype(np.int64)
    return np.clip(idx, 0, _HIST_BINS - 1)


def quantile_edges(fm, boundaries, indices, subsample_rate=1.0, seed=0):
    """Edges per requested quantile index, emitted in (u, v) order."""
    unit = as_feature_matrix(fm).centered_unit
    last = len(boundaries) - 2
    out = {int(i): [] for i in indices}
    for u, v, s in _pair_chunks(unit):
        for i in out:
            lo, hi = boundaries[i], boundaries[i + 1]
            mask = (s >= lo) & ((s <= hi) if i == last else (s < hi))
            out[i].append(np.column_stack([u[mask], v[mask]]))
    result = {}
    for i, parts in out.items():
        edges = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
        if subsample_rate < 1.0:
            rng = np.random.default_rng([seed, i])
            edges = edges[rng.random(len(edges)) < subsample_rate]
        result[i] = edges
    return result


def _metadata(fm, g, index, boundaries, n_quantiles):
    from .similarity import pair_similarities
    sims = pair_similarities(fm, g.edges[:, 0], g.edges[:, 1])
    return {
        "quantile_index": int(index),
        "n_quantiles": int(n_quantiles),
        "n_nodes": int(g.n_nodes),
        "edge_count": int(g.n_edges),
        "K": graph_similarity(fm, g) if g.n_edges else None,
        "similarity_min": float(sims.min()) if len(sims) else None,
        "similarity_max": float(sims.max()) if len(sims) else None,
        "quantile_lower": _finite_or_none(boundaries[index]),
        "quantile_upper": _finite_or_none(boundaries[index + 1]),
    }


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


def generate_quantile_graph(spec):
    spec.validate()
    fm = spec.resolve_features()
    bounds = quantile_boundaries(fm, spec.n_quantiles, spec.pair_budget)
    edges = quantile_edges(fm, bounds, [spec.index], spec.edge_subsample_rate, spec.seed)
    g = build_graph(fm.n, edges[spec.index])
    return g, fm, _metadata(fm, g, spec.index, bounds, spec.n_quantiles)


def generate_quantile_sweep(spec):
    """One graph per entry of spec.selected_quantiles, sharing nodes and features."""
    spec.validate()
    fm = spec.resolve_features()
    bounds = quantile_boundaries(fm, spec.n_quantiles, spec.pair_budget)
    edges = quantile_edges(fm, bounds, spec.selected_quantiles,
                           spec.edge_subsample_rate, spec.seed)
    graphs = []
    for q in spec.selected_quantiles:
        g = build_graph(fm.n, edges[q])
        graphs.append((g, _metadata(fm, g, q, bounds, spec.n_quantiles)))
    return fm, graphs


@dataclass
class TwoFeatureSpec:
    degree: int
    theta1: float = np.pi / 6
    theta2: float = 2 * np.pi / 3
    block_size: int | None = None


@dataclass
class ThresholdSpec:
    M: float
    mode: str = "homo"  # homo | hetero | gated
    n_nodes: int = 400
    seed: int = 0
    M2: float | None = None  # upper bound, gated mode only
    angles: np.ndarray | None = field(default=None, repr=False)


def generate_two_feature_graph(spec):
    """Two blocks with fixed unit features, wired by a d-regular circulant
    bipartite pattern; returns (graph, features, block labels)."""
    d = int(spec.degree)
    if d < 0:
        raise InputError("degree must be >= 0")
    m = spec.block_size if spec.block_size is not None else max(d, 1)
    if m < max(d, 1):
        raise InputError(f"degree {d} exceeds opposite block size {m}")
    a = np.arange(m)
    if d:
        u = np.repeat(a, d)
        v = m + (u + np.tile(np.arange(d), m)) % m
        edges = np.column_stack([u, v])
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
    g = build_graph(2 * m, edges)
    angles = np.concatenate([np.full(m, spec.theta1), np.full(m, spec.theta2)])
    blocks = np.repeat([0, 1], m)
    return g, UnitCircleFeatures(angles), blocks


def generate_threshold_graph(spec):
    """Random unit-circle features; edge iff cos(theta_u - theta_v) >= M (homo),
    <= M (hetero) or within [M, M2] (gated)."""
    if spec.mode not in ("homo", "hetero", "gated"):
        raise InputError(f"unknown mode {spec.mode!r}")
    if not -1 <= spec.M <= 1:
        raise InputError("M must lie in [-1, 1]")
    if spec.mode == "gated":
        if spec.M2 is None or not -1 <= spec.M2 <= 1:
            raise InputError("gated mode needs M2 in [-1, 1]")
        if spec.M > spec.M2:
            raise InputError("gated mode needs M <= M2")
    if spec.angles is not None:
        angles = np.asarray(spec.angles, dtype=np.float64)
    else:
        angles = np.random.default_rng(spec.seed).uniform(0, 2 * np.pi, spec.n_nodes)
    n = len(angles)
    u, v = np.triu_indices(n, k=1)
    k = np.cos(angles[u] - angles[v])
    if spec.mode == "homo":
        mask = k >= spec.M
    elif spec.mode == "hetero":
        mask = k <= spec.M
    else:
        mask = (k >= spec.M) & (k <= spec.M2)
    g = build_graph(n, np.column_stack([u[mask], v[mask]]))
    return g, UnitCircleFeatures(angles)

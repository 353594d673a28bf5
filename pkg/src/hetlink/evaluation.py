"""Ranking metrics, degree x similarity bucket analysis and report emission."""
import csv
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DomainError, InputError
from .model import check_pairs, encode, score_embeddings
from .similarity import pair_similarities, sample_non_edges
from .training import corrupt_second

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalConfig:
    metric: str = "mrr"
    n_neg: int = 1000
    hits_k: int = 50
    hits_neg: int = 1000
    sim_buckets: int = 3
    deg_buckets: int = 3
    corrupt: str = "second"
    seed: int = 0

    def __post_init__(self):
        if self.metric not in ("mrr", "hits"):
            raise InputError(f"unknown metric {self.metric!r}")
        if self.n_neg < 1 or self.hits_k < 1 or self.hits_neg < 1:
            raise InputError("n_neg, hits_k and hits_neg must be >= 1")
        if self.corrupt not in ("second", "both"):
            raise InputError("corrupt must be 'second' or 'both'")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def reciprocal_rank(pos_score, neg_scores):
    """1 / (1 + #higher + 0.5 * #tied)."""
    neg = np.asarray(neg_scores, dtype=np.float64)
    higher = np.count_nonzero(neg > pos_score)
    ties = np.count_nonzero(neg == pos_score)
    return 1.0 / (1.0 + higher + 0.5 * ties)


def reciprocal_ranks(pos_scores, neg_scores):
    """Row-wise reciprocal_rank for pos (m,) against neg (m, k)."""
    pos = np.asarray(pos_scores)[:, None]
    higher = np.count_nonzero(neg_scores > pos, axis=1)
    ties = np.count_nonzero(neg_scores == pos, axis=1)
    return 1.0 / (1.0 + higher + 0.5 * ties)


def corruption_negatives(known, test_pairs, n_neg, seed, corrupt="second"):
    """Negatives for each test positive, drawn from its own RNG stream
    seeded by (seed, positive index) so any evaluation order agrees."""
    test_pairs = np.asarray(test_pairs, dtype=np.int64)
    m = len(test_pairs)
    n_tail = n_neg if corrupt == "second" else n_neg - n_neg // 2
    n_head = n_neg - n_tail
    out = np.empty((m, n_neg, 2), dtype=np.int64)
    for k in range(m):
        rng = np.random.default_rng([seed, k])
        u, v = test_pairs[k]
        tails = corrupt_second(known, [u], n_tail, rng)[0]
        out[k, :n_tail, 0] = u
        out[k, :n_tail, 1] = tails
        if n_head:
            heads = corrupt_second(known, [v], n_head, rng)[0]
            out[k, n_tail:, 0] = heads
            out[k, n_tail:, 1] = v
    return out


class RankingTask:
    """Positives with their corruption negatives drawn once, so repeated
    scoring (e.g. validation during training) skips resampling."""

    def __init__(self, known, pairs, n_neg, seed, corrupt="second"):
        self.pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        self.n_neg = n_neg
        self.negatives = corruption_negatives(known, self.pairs, n_neg, seed,
                                              corrupt).reshape(-1, 2)

    def reciprocal_ranks(self, scorer):
        if len(self.pairs) == 0:
            return np.zeros(0)
        pos = scorer(self.pairs)
        neg = scorer(self.negatives).reshape(len(self.pairs), self.n_neg)
        return reciprocal_ranks(pos, neg)

    def mrr(self, scorer):
        rr = self.reciprocal_ranks(scorer)
        return float(rr.mean()) if len(rr) else float("nan")


def per_edge_rr(scorer, test_pairs, known, cfg):
    return RankingTask(known, test_pairs, cfg.n_neg, cfg.seed, cfg.corrupt).reciprocal_ranks(scorer)


def per_edge_hits(scorer, test_pairs, known, cfg):
    test_pairs = np.asarray(test_pairs, dtype=np.int64).reshape(-1, 2)
    if cfg.hits_k >= cfg.hits_neg:
        return np.ones(len(test_pairs))
    rng = np.random.default_rng([cfg.seed, 1 << 30])
    neg_pairs = sample_non_edges(known, cfg.hits_neg, rng)
    neg = np.sort(scorer(neg_pairs))[::-1]
    kth = neg[cfg.hits_k - 1]
    return (scorer(test_pairs) > kth).astype(np.float64)


def model_scorer(spec, params, g, X):
    Z = encode(spec, params, g, X)
    return lambda pairs: score_embeddings(spec, params, Z, check_pairs(pairs, g.n_nodes))


def mrr(spec, params, g, X, test_pairs, cfg, known=None):
    """Mean reciprocal rank; message passing over g, negatives avoid edges of `known`."""
    rr = per_edge_rr(model_scorer(spec, params, g, X), test_pairs,
                     known if known is not None else g, cfg)
    return float(rr.mean()) if len(rr) else float("nan")


def hits_at_k(spec, params, g, X, test_pairs, cfg, known=None):
    hits = per_edge_hits(model_scorer(spec, params, g, X), test_pairs,
                         known if known is not None else g, cfg)
    return float(hits.mean()) if len(hits) else float("nan")


# ---------------------------------------------------------------- buckets

@dataclass
class BucketAssignment:
    deg_index: np.ndarray
    sim_index: np.ndarray
    deg_bounds: list
    sim_bounds: list
    min_degree: np.ndarray
    similarity: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def shape(self):
        return len(self.deg_bounds) + 1, len(self.sim_bounds) + 1


def tercile_bounds(values, n_buckets):
    """Inner boundaries at the k / n_buckets empirical quantiles, deduplicated;
    bucket b holds bounds[b-1] < x <= bounds[b]."""
    values = np.asarray(values, dtype=np.float64)
    qs = [np.quantile(values, k / n_buckets, method="inverted_cdf")
          for k in range(1, n_buckets)]
    bounds = sorted(set(float(q) for q in qs))
    while bounds and bounds[-1] >= values.max():
        bounds.pop()
    return bounds


def bucketize(g_train, fm, test_pairs, cfg):
    test_pairs = np.asarray(test_pairs, dtype=np.int64).reshape(-1, 2)
    n_deg = cfg.deg_buckets
    if len(test_pairs) < max(n_deg, cfg.sim_buckets):
        raise DomainError(f"{len(test_pairs)} test edges cannot fill the requested buckets")
    deg = np.minimum(g_train.degrees[test_pairs[:, 0]], g_train.degrees[test_pairs[:, 1]])
    sim = pair_similarities(fm, test_pairs[:, 0], test_pairs[:, 1])
    warnings = []
    _, counts = np.unique(deg, return_counts=True)
    if n_deg > 2 and counts.max() > 0.5 * len(deg):
        n_deg = 2
        warnings.append("degree buckets reduced to 2: over half of test edges share a degree")
    deg_bounds = tercile_bounds(deg, n_deg)
    sim_bounds = tercile_bounds(sim, cfg.sim_buckets)
    if len(deg_bounds) + 1 < n_deg:
        warnings.append(f"degree quantiles degenerate: {len(deg_bounds) + 1} bucket(s)")
    if len(sim_bounds) + 1 < cfg.sim_buckets:
        warnings.append(f"similarity quantiles degenerate: {len(sim_bounds) + 1} bucket(s)")
    for w in warnings:
        log.warning(w)
    return BucketAssignment(
        deg_index=np.searchsorted(deg_bounds, deg, side="left"),
        sim_index=np.searchsorted(sim_bounds, sim, side="left"),
        deg_bounds=deg_bounds, sim_bounds=sim_bounds,
        min_degree=deg, similarity=sim, warnings=warnings,
    )


def bucket_grid(assign, values):
    n_d, n_s = assign.shape
    grid = []
    for a in range(n_d):
        row = []
        for b in range(n_s):
            mask = (assign.deg_index == a) & (assign.sim_index == b)
            count = int(mask.sum())
            row.append({"value": float(values[mask].mean()) if count else None, "count": count})
        grid.append(row)
    return grid


# ---------------------------------------------------------------- reports

@dataclass
class EvalReport:
    metric: str
    overall: float
    per_bucket: list
    bucket_edges: dict
    metadata: dict = field(default_factory=dict)
    n_test: int = 0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def evaluate_scorer(scorer, g_train, fm, test_pairs, cfg, known, metadata=None):
    test_pairs = np.asarray(test_pairs, dtype=np.int64).reshape(-1, 2)
    if cfg.metric == "mrr":
        values = per_edge_rr(scorer, test_pairs, known, cfg)
    else:
        values = per_edge_hits(scorer, test_pairs, known, cfg)
    assign = bucketize(g_train, fm, test_pairs, cfg)
    return EvalReport(
        metric=cfg.metric,
        overall=float(values.mean()),
        per_bucket=bucket_grid(assign, values),
        bucket_edges={"degree": [float(b) for b in assign.deg_bounds],
                      "similarity": assign.sim_bounds},
        metadata=dict(metadata or {}),
        n_test=len(test_pairs),
    )


def evaluate_model(spec, params, g_train, fm, test_pairs, cfg, known, metadata=None):
    return evaluate_scorer(model_scorer(spec, params, g_train, fm), g_train, fm,
                           test_pairs, cfg, known, metadata)


def compare_reports(a, b):
    """Per-bucket a - b; None where either side has an empty bucket."""
    if len(a.per_bucket) != len(b.per_bucket) or any(
            len(ra) != len(rb) for ra, rb in zip(a.per_bucket, b.per_bucket)):
        raise InputError("reports have different bucket grids")
    out = []
    for ra, rb in zip(a.per_bucket, b.per_bucket):
        row = []
        for ca, cb in zip(ra, rb):
            missing = not ca["count"] or not cb["count"]
            row.append({"diff": None if missing else ca["value"] - cb["value"],
                        "count_a": ca["count"], "count_b": cb["count"]})
        out.append(row)
    return out


def write_buckets_csv(report, path, scale=100.0):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["deg_bucket", "sim_bucket", "value", "count"])
        for a, row in enumerate(report.per_bucket):
            for b, cell in enumerate(row):
                v = "" if cell["value"] is None else f"{scale * cell['value']:.2f}"
                w.writerow([a, b, v, cell["count"]])


def write_diff_csv(diff, path, scale=100.0):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["deg_bucket", "sim_bucket", "diff", "count_a", "count_b"])
        for a, row in enumerate(diff):
            for b, cell in enumerate(row):
                v = "" if cell["diff"] is None else f"{scale * cell['diff']:.2f}"
                w.writerow([a, b, v, cell["count_a"], cell["count_b"]])

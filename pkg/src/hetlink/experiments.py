"""The quantile-sweep experiment: every (graph, seed) cell trains the
configured encoder/decoder pairs and scores the heuristics on one shared
split and one shared set of test negatives."""
import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluation import EvalConfig, RankingTask, model_scorer
from .exceptions import InputError
from .graph import split_edges, subgraph
from .heuristics import heuristic_scores
from .model import ModelSpec, init_params
from .synthgen import SWEEP_INDICES, QuantileGenSpec, generate_quantile_sweep
from .training import TrainConfig, train

log = logging.getLogger(__name__)

HEURISTICS = ("cn", "aa", "ra", "ppr")


@dataclass(frozen=True)
class SweepConfig:
    n_nodes: int = 2000
    n_features: int = 8
    feature_seed: int = 0
    gen_seed: int = 0
    n_quantiles: int = 50
    quantiles: tuple = SWEEP_INDICES
    edge_subsample_rate: float = 1.0
    split_seed: int = 0
    seeds: tuple = (1, 2, 3)
    # method name "enc+dec" -> quantile indices it runs on (None: all)
    methods: dict = field(default_factory=lambda: {"sage+mlp": None})
    heuristics: tuple = ("cn", "aa", "ra")
    layers: int = 2
    hidden: int = 64
    train: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    def validate(self):
        problems = []
        if not self.seeds:
            problems.append("seeds: must be non-empty")
        if not self.quantiles:
            problems.append("quantiles: must be non-empty")
        for q in self.quantiles:
            if not 0 <= q < self.n_quantiles:
                problems.append(f"quantiles: {q} outside [0, {self.n_quantiles})")
        for name, where in self.methods.items():
            try:
                _parse_method(name)
            except InputError as exc:
                problems.append(f"methods.{name}: {exc}")
            for q in where or ():
                if q not in self.quantiles:
                    problems.append(f"methods.{name}: quantile {q} not in the sweep")
        for h in self.heuristics:
            if h not in HEURISTICS:
                problems.append(f"heuristics: unknown {h!r}")
        for section, cls in (("train", TrainConfig), ("eval", EvalConfig)):
            extra = set(getattr(self, section)) - set(cls.__dataclass_fields__)
            if extra:
                problems.append(f"{section}: unknown keys {sorted(extra)}")
            else:
                try:
                    cls.from_dict(getattr(self, section))
                except InputError as exc:
                    problems.append(f"{section}: {exc}")
        if problems:
            raise InputError("invalid sweep config", fields=problems)

    def to_dict(self):
        d = asdict(self)
        d["quantiles"] = list(self.quantiles)
        d["seeds"] = list(self.seeds)
        d["heuristics"] = list(self.heuristics)
        d["methods"] = {k: (list(v) if v is not None else None) for k, v in self.methods.items()}
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError("invalid sweep config", fields=[f"{k}: unknown key" for k in sorted(unknown)])
        d = dict(d)
        for key in ("quantiles", "seeds", "heuristics"):
            if key in d:
                d[key] = tuple(d[key])
        if "methods" in d:
            if isinstance(d["methods"], (list, tuple)):
                d["methods"] = {m: None for m in d["methods"]}
            d["methods"] = {k: (tuple(v) if v is not None else None) for k, v in d["methods"].items()}
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def gen_spec(self):
        return QuantileGenSpec(n_nodes=self.n_nodes, n_features=self.n_features,
                               feature_seed=self.feature_seed, n_quantiles=self.n_quantiles,
                               selected_quantiles=tuple(self.quantiles),
                               edge_subsample_rate=self.edge_subsample_rate, seed=self.gen_seed)


def _parse_method(name):
    parts = name.split("+")
    if len(parts) != 2:
        raise InputError(f"method must look like 'encoder+decoder', got {name!r}")
    return ModelSpec(encoder=parts[0], decoder=parts[1])


def run_cell(cfg, fm, g, meta, seed):
    """All methods and heuristics on one graph for one seed."""
    split = split_edges(g, seed=cfg.split_seed)
    g_train = subgraph(g, split.train)
    ecfg = EvalConfig.from_dict({**cfg.eval, "seed": seed})
    tcfg = TrainConfig.from_dict({**cfg.train, "seed": seed})
    task = RankingTask(g, split.test, ecfg.n_neg, seed, ecfg.corrupt)
    q = meta["quantile_index"]
    rows = []
    for name, where in cfg.methods.items():
        if where is not None and q not in where:
            continue
        base = _parse_method(name)
        spec = ModelSpec(encoder=base.encoder, decoder=base.decoder,
                         layers=cfg.layers, hidden=cfg.hidden)
        params = init_params(spec, fm.dim, seed=seed)
        trace = train(spec, params, g_train, fm.rows, split, tcfg, known=g)
        value = task.mrr(model_scorer(spec, params, g_train, fm.rows))
        rows.append({"quantile_index": q, "method": name, "seed": seed, "mrr": value,
                     "best_epoch": trace.best_epoch, "params_checksum": trace.params_checksum})
    for h in cfg.heuristics:
        value = task.mrr(lambda pairs, h=h: heuristic_scores(g_train, pairs, h))
        rows.append({"quantile_index": q, "method": h, "seed": seed, "mrr": value})
    log.info("cell q=%d seed=%d done", q, seed)
    return rows


def _cell_job(args):
    cfg, fm, g, meta, seed = args
    return run_cell(cfg, fm, g, meta, seed)


def worker_count():
    cap = os.environ.get("HETLINK_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InputError(f"HETLINK_THREADS must be an integer, got {cap!r}") from None
    return n


def run_sweep(cfg, workers=None):
    """Returns {"config", "graphs", "runs", "summary"} with no timing fields,
    so repeated runs with equal configs serialize identically."""
    cfg.validate()
    fm, graphs = generate_quantile_sweep(cfg.gen_spec())
    jobs = [(cfg, fm, g, meta, seed) for g, meta in graphs for seed in cfg.seeds]
    workers = min(workers or worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = [_cell_job(job) for job in jobs]
    runs = [row for rows in results for row in rows]
    return {
        "config": cfg.to_dict(),
        "graphs": [meta for _, meta in graphs],
        "runs": runs,
        "summary": summarize(runs),
    }


def summarize(runs):
    """Mean and population std of MRR per (method, quantile index)."""
    groups = {}
    for r in runs:
        groups.setdefault((r["method"], r["quantile_index"]), []).append(r["mrr"])
    out = []
    for (method, q), vals in sorted(groups.items()):
        out.append({"method": method, "quantile_index": q, "n_runs": len(vals),
                    "mean": float(np.mean(vals)), "std": float(np.std(vals))})
    return out


def summary_lookup(result):
    return {(s["method"], s["quantile_index"]): s for s in result["summary"]}


def write_sweep_outputs(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(result, sort_keys=True, indent=2) + "\n")
    quantiles = [m["quantile_index"] for m in result["graphs"]]
    K = {m["quantile_index"]: m["K"] for m in result["graphs"]}
    table = summary_lookup(result)
    methods = list(dict.fromkeys(s["method"] for s in result["summary"]))
    with open(os.path.join(out_dir, "table2_style.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method"] + [f"q{q}" for q in quantiles])
        for m in methods:
            cells = []
            for q in quantiles:
                s = table.get((m, q))
                cells.append("" if s is None else f"{100 * s['mean']:.2f}±{100 * s['std']:.2f}")
            w.writerow([m] + cells)
    with open(os.path.join(out_dir, "ucurve.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantile_index", "K", "method", "mrr_mean", "mrr_std", "n_runs"])
        for s in result["summary"]:
            q = s["quantile_index"]
            w.writerow([q, f"{K[q]:.6f}", s["method"], f"{100 * s['mean']:.4f}",
                        f"{100 * s['std']:.4f}", s["n_runs"]])

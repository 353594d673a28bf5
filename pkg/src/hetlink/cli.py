"""Command-line entry point: ``hetlink <command> [--config PATH] [--seed N] [--out PATH]``.

Every command exits 0 on success. On failure it prints one JSON object
(``{"error": kind, "message": ..., "context": ...}``) to stderr and exits 1.
"""
import argparse
import csv
import json
import logging
import os
import sys
from importlib import resources

import jsonschema
import numpy as np

from .evaluation import EvalConfig, EvalReport, compare_reports, evaluate_model, evaluate_scorer
from .evaluation import write_buckets_csv, write_diff_csv
from .exceptions import DomainError, HetlinkError, InputError
from .experiments import SweepConfig, run_sweep, write_sweep_outputs
from .features import load_features, save_features
from .graph import load_graph, save_graph, split_edges, subgraph
from .heuristics import heuristic_scores
from .model import ModelSpec, init_params, load_checkpoint, save_checkpoint
from .similarity import build_profile, classify_task, histogram
from .synthgen import QuantileGenSpec, generate_quantile_graph, generate_quantile_sweep
from .training import TrainConfig, train

log = logging.getLogger("hetlink")

RUN_FILE = "run.json"
PARAMS_FILE = "params.hlpp"


# ---------------------------------------------------------------- io helpers

def _schema(name):
    text = resources.files("hetlink").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def write_json(path, obj, schema=None):
    if schema is not None:
        jsonschema.validate(obj, _schema(schema))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg})", path=str(path)) from None


def _load_config(args):
    return read_json(args.config) if getattr(args, "config", None) else {}


def _out_dir(args, cfg, default="."):
    out = args.out or cfg.get("out_dir") or default
    os.makedirs(out, exist_ok=True)
    return out


def _section(cls, data, name, problems):
    data = data or {}
    unknown = set(data) - set(cls.__dataclass_fields__)
    for key in sorted(unknown):
        problems.append(f"{name}.{key}: unknown field")
    try:
        return cls.from_dict(data)
    except (InputError, TypeError) as exc:
        problems.append(f"{name}: {exc}")
        return None


# ---------------------------------------------------------------- run configs

def resolve_run_config(cfg, args):
    """Merge a run config with command-line overrides, reporting every bad field."""
    problems = []
    data = dict(cfg.get("data") or {})
    for key in ("graph", "features"):
        if getattr(args, key, None):
            data[key] = getattr(args, key)
        if not data.get(key):
            problems.append(f"data.{key}: required")
        elif not os.path.exists(data[key]):
            problems.append(f"data.{key}: file not found: {data[key]}")
    model = dict(cfg.get("model") or {})
    for key in ("encoder", "decoder", "hidden", "layers"):
        if getattr(args, key, None) is not None:
            model[key] = getattr(args, key)
    tr = dict(cfg.get("train") or {})
    if getattr(args, "epochs", None) is not None:
        tr["epochs"] = args.epochs
    if getattr(args, "lr", None) is not None:
        tr["learning_rate"] = args.lr
    if args.seed is not None:
        tr["seed"] = args.seed
    spec = _section(ModelSpec, model, "model", problems)
    tcfg = _section(TrainConfig, tr, "train", problems)
    ecfg = _section(EvalConfig, cfg.get("eval"), "eval", problems)
    split_seed = cfg.get("split_seed", 0)
    if not isinstance(split_seed, int):
        problems.append("split_seed: must be an integer")
    if problems:
        raise InputError("invalid run config", fields=problems)
    return {"data": data, "model": spec, "train": tcfg, "eval": ecfg, "split_seed": split_seed}


def _prepare(run):
    g = load_graph(run["data"]["graph"])
    fm = load_features(run["data"]["features"])
    if fm.n != g.n_nodes:
        raise InputError(f"features have {fm.n} rows, graph has {g.n_nodes} nodes")
    split = split_edges(g, seed=run["split_seed"])
    return g, fm, split, subgraph(g, split.train)


def _load_run(run_dir):
    record = read_json(os.path.join(run_dir, RUN_FILE))
    ckpt = os.path.join(run_dir, PARAMS_FILE)
    if not os.path.exists(ckpt):
        raise InputError(f"checkpoint not found: {ckpt}", path=ckpt)
    run = {
        "data": record["data"],
        "model": ModelSpec.from_dict(record["model"]),
        "train": TrainConfig.from_dict(record["train"]),
        "eval": EvalConfig.from_dict(record["eval"]),
        "split_seed": record["split_seed"],
    }
    return run, load_checkpoint(ckpt)


# ---------------------------------------------------------------- commands

def cmd_synthgen(args):
    cfg = _load_config(args)
    fields = {k: cfg[k] for k in ("n_nodes", "n_features", "feature_seed", "n_quantiles",
                                  "index", "edge_subsample_rate", "seed", "feature_path") if k in cfg}
    for flag, key in (("n", "n_nodes"), ("dim", "n_features"), ("quantiles", "n_quantiles"),
                      ("index", "index"), ("seed", "seed"), ("subsample", "edge_subsample_rate"),
                      ("feature_seed", "feature_seed"), ("features", "feature_path")):
        if getattr(args, flag, None) is not None:
            fields[key] = getattr(args, flag)
    if args.sweep_indices:
        fields["selected_quantiles"] = tuple(int(x) for x in args.sweep_indices.split(","))
    spec = QuantileGenSpec(**fields)
    prefix = args.out or cfg.get("out_prefix") or "graph"
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    if args.sweep:
        fm, graphs = generate_quantile_sweep(spec)
        save_features(fm, prefix + ".featb")
        for g, meta in graphs:
            stem = f"{prefix}_q{meta['quantile_index']}"
            save_graph(g, stem + ".graph")
            write_json(stem + ".meta.json", meta, "meta")
        return 0
    g, fm, meta = generate_quantile_graph(spec)
    save_graph(g, prefix + ".graph")
    save_features(fm, prefix + ".featb")
    write_json(prefix + ".meta.json", meta, "meta")
    return 0


def cmd_simstats(args):
    cfg = _load_config(args)
    g = load_graph(args.graph or cfg["graph"])
    fm = load_features(args.features or cfg["features"])
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    profile = build_profile(fm, g, n_neg_samples=args.n_neg or cfg.get("n_neg_samples", 10000),
                            seed=seed, epsilon=args.epsilon or cfg.get("epsilon", 0.05))
    cls = classify_task(profile)
    pos_counts, edges = histogram(profile.pos_samples)
    neg_counts, _ = histogram(profile.neg_samples)
    out = _out_dir(args, cfg)
    stats = {"K": profile.K, **cls.to_dict(), "epsilon": profile.epsilon,
             "n_pos": int(len(profile.pos_samples)), "n_neg": int(len(profile.neg_samples)),
             "bin_edges": edges.tolist(), "pos_histogram": pos_counts.tolist(),
             "neg_histogram": neg_counts.tolist()}
    write_json(os.path.join(out, "simstats.json"), stats, "simstats")
    for name, counts in (("pos", pos_counts), ("neg", neg_counts)):
        with open(os.path.join(out, f"simstats_{name}_hist.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                w.writerow([f"{lo:.6f}", f"{hi:.6f}", int(c)])
    return 0


def cmd_train(args):
    cfg = _load_config(args)
    run = resolve_run_config(cfg, args)
    out = _out_dir(args, cfg)
    g, fm, split, g_train = _prepare(run)
    spec, tcfg = run["model"], run["train"]
    params = init_params(spec, fm.dim, seed=tcfg.seed)
    trace = train(spec, params, g_train, fm.rows, split, tcfg, known=g)
    write_json(os.path.join(out, "trace.json"), trace.to_dict(), "trace")
    with open(os.path.join(out, "trace.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "val_mrr"])
        val = dict(zip(trace.val_epochs, trace.val_mrr))
        for e, loss in enumerate(trace.loss, start=1):
            w.writerow([e, repr(loss), "" if e not in val else repr(val[e])])
    save_checkpoint(params, os.path.join(out, PARAMS_FILE))
    record = {"data": run["data"], "model": spec.to_dict(), "train": tcfg.to_dict(),
              "eval": run["eval"].to_dict(), "split_seed": run["split_seed"],
              "params_checksum": trace.params_checksum}
    write_json(os.path.join(out, RUN_FILE), record, "run")
    return 0


def _eval_config(run_eval, args):
    d = run_eval.to_dict()
    if args.metric:
        d["metric"] = args.metric
    if args.n_neg is not None:
        d["n_neg"] = args.n_neg
    if args.seed is not None:
        d["seed"] = args.seed
    return EvalConfig.from_dict(d)


def cmd_eval(args):
    if not args.run:
        raise InputError("eval needs --run <training output directory>")
    run, params = _load_run(args.run)
    g, fm, split, g_train = _prepare(run)
    ecfg = _eval_config(run["eval"], args)
    meta = {"model": run["model"].to_dict(), "eval": ecfg.to_dict(),
            "params_checksum": params.checksum(), "split_seed": run["split_seed"]}
    report = evaluate_model(run["model"], params, g_train, fm, split.test, ecfg, g, meta)
    out = args.out or args.run
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, "report.json"), report.to_dict(), "report")
    write_buckets_csv(report, os.path.join(out, "buckets.csv"))
    return 0


def cmd_buckets(args):
    a = EvalReport.load(args.report)
    out = args.out or os.path.dirname(os.path.abspath(args.report))
    os.makedirs(out, exist_ok=True)
    write_buckets_csv(a, os.path.join(out, "buckets.csv"))
    if args.against:
        b = EvalReport.load(args.against)
        write_diff_csv(compare_reports(a, b), os.path.join(out, "buckets_diff.csv"))
    return 0


def cmd_heuristic(args):
    cfg = _load_config(args)
    g = load_graph(args.graph or cfg["graph"])
    fm = load_features(args.features or cfg["features"])
    if fm.n != g.n_nodes:
        raise InputError(f"features have {fm.n} rows, graph has {g.n_nodes} nodes")
    split = split_edges(g, seed=cfg.get("split_seed", 0) if args.split_seed is None else args.split_seed)
    g_train = subgraph(g, split.train)
    d = dict(cfg.get("eval") or {})
    if args.seed is not None:
        d["seed"] = args.seed
    if args.n_neg is not None:
        d["n_neg"] = args.n_neg
    if args.metric:
        d["metric"] = args.metric
    ecfg = EvalConfig.from_dict(d)
    method = args.method or cfg.get("method", "cn")
    report = evaluate_scorer(lambda p: heuristic_scores(g_train, p, method), g_train, fm,
                             split.test, ecfg, g, {"heuristic": method, "eval": ecfg.to_dict()})
    out = _out_dir(args, cfg)
    write_json(os.path.join(out, "report.json"), report.to_dict(), "report")
    write_buckets_csv(report, os.path.join(out, "buckets.csv"))
    return 0


def cmd_verify(args):
    from . import theory
    out = _out_dir(args, {})
    if args.theorem == 1:
        report = theory.thm1_report()
        k, homo, hetero = theory.closed_form_curves(0.5)
        with open(os.path.join(out, "fig2.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "y_homo", "y_hetero"])
            for row in zip(k, homo, hetero):
                w.writerow([f"{x:.6f}" for x in row])
    elif args.theorem == 2:
        report = theory.thm2_report(seed=args.seed or 0)
    else:
        report = theory.thm3_report()
    write_json(os.path.join(out, f"thm{args.theorem}_report.json"), _jsonable(report), "theorem")
    if not report["passed"]:
        failed = [a["name"] for a in report["assertions"] if not a["passed"]]
        raise DomainError(f"theorem {args.theorem} checks failed", failed=failed)
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    sweep_cfg = {k: v for k, v in cfg.items() if k != "out_dir"}
    if args.seeds:
        sweep_cfg["seeds"] = [int(s) for s in args.seeds.split(",")]
    elif args.seed is not None:
        sweep_cfg["seeds"] = [args.seed]
    sc = SweepConfig.from_dict(sweep_cfg)
    result = run_sweep(sc)
    out = _out_dir(args, cfg, "sweep_out")
    jsonschema.validate(result, _schema("sweep"))
    write_sweep_outputs(result, out)
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="hetlink", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help="output directory"):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help=out_help)

    s = sub.add_parser("synthgen", help="generate a similarity-quantile graph")
    common(s, "output prefix")
    s.add_argument("--out-prefix", dest="out")
    s.add_argument("--n", type=int)
    s.add_argument("--dim", type=int, help="Gaussian feature dimension")
    s.add_argument("--features", help="existing feature file to wire")
    s.add_argument("--feature-seed", type=int)
    s.add_argument("--quantiles", type=int)
    s.add_argument("--index", type=int)
    s.add_argument("--subsample", type=float)
    s.add_argument("--sweep", action="store_true", help="write every sweep graph")
    s.add_argument("--sweep-indices", help="comma-separated quantile indices for --sweep")
    s.set_defaults(func=cmd_synthgen)

    s = sub.add_parser("simstats", help="similarity profile and task class")
    common(s)
    s.add_argument("--graph")
    s.add_argument("--features")
    s.add_argument("--n-neg", type=int)
    s.add_argument("--epsilon", type=float)
    s.set_defaults(func=cmd_simstats)

    s = sub.add_parser("train", help="train an encoder/decoder model")
    common(s)
    s.add_argument("--graph")
    s.add_argument("--features")
    s.add_argument("--encoder")
    s.add_argument("--decoder")
    s.add_argument("--hidden", type=int)
    s.add_argument("--layers", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="evaluate a trained run")
    common(s)
    s.add_argument("--run", help="directory written by `train`")
    s.add_argument("--metric", choices=("mrr", "hits"))
    s.add_argument("--n-neg", type=int)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("buckets", help="bucket table and optional difference")
    common(s)
    s.add_argument("--report", required=True)
    s.add_argument("--against")
    s.set_defaults(func=cmd_buckets)

    s = sub.add_parser("heuristic", help="evaluate a topological heuristic")
    common(s)
    s.add_argument("--graph")
    s.add_argument("--features")
    s.add_argument("--method", choices=("cn", "aa", "ra", "ppr"))
    s.add_argument("--split-seed", type=int)
    s.add_argument("--metric", choices=("mrr", "hits"))
    s.add_argument("--n-neg", type=int)
    s.set_defaults(func=cmd_heuristic)

    s = sub.add_parser("verify", help="numerical checks of the decoder/encoder claims")
    common(s)
    s.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="the 10-graph quantile sweep")
    common(s)
    s.add_argument("--seeds", help="comma-separated seed list")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except HetlinkError as exc:
        err = exc.to_dict()
    except KeyError as exc:
        err = {"error": "input_error", "message": f"missing config field {exc}"}
    except OSError as exc:
        err = {"error": "io_error", "message": str(exc)}
    print(json.dumps(_jsonable(err), sort_keys=True), file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())

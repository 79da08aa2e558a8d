"""Command-line entry point.

Subcommands mirror the pipeline stages: `gen` writes a synthetic corpus,
`featurize` turns GML files into a feature table, `importance` and
`classify` run the two protocols, `communities` distills the four
sampling regimes into partitions and their overlap, and `all` chains the
stages on a declared corpus.

Every output directory gets a manifest embedding the generating
configuration.  Thread count is deliberately absent from manifests: it
must never change an output byte.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import rng as rng_mod
from .features import FeatureVector, ZScoreReport, featurize
from .generators import GraphSpec, generate
from .graph import drop_isolated_nodes, load_gml, write_gml
from .learner import ForestConfig
from .nullmodels import EnsembleSpec
from . import pipeline as pl
from .sampling import REGIMES

DEFAULT_CORPUS = (
    ("er", {"mean_degree": 8.0}),
    ("ws", {"k": 8, "p": 0.05}),
    ("ba", {"m": 4, "m0": 4}),
    ("ff", {"p_f": 0.37, "p_b": 0.32, "ambassadors": 1}),
)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"netfp: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netfp",
        description="structural fingerprints and classification for network corpora")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--model", required=True, choices=["er", "ws", "ba", "ff"])
    p.add_argument("--params", default="",
                   help="comma list key=value; integer ranges as lo:hi")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--label", default=None,
                   help="class label recorded in the manifest (default: model)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("featurize", help="GML corpus -> feature table")
    p.add_argument("--in", dest="indir", required=True)
    p.add_argument("--manifest", default=None,
                   help="corpus manifest (default: <in>/manifest.json)")
    p.add_argument("--out", required=True, help="features csv path")
    p.add_argument("--ensemble-size", type=int, default=100)
    p.add_argument("--swaps-per-edge", type=int, default=10)
    p.add_argument("--sp-norm", choices=["euclidean", "squared-sum"],
                   default="euclidean")
    p.add_argument("--counting", choices=["induced", "subgraph"],
                   default="induced")
    p.add_argument("--drop-isolated", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    _thread_flag(p)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("importance",
                       help="one-vs-rest AUC and importance-rank histogram")
    p.add_argument("--features", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _protocol_flags(p)
    p.set_defaults(func=_cmd_importance)

    p = sub.add_parser("classify",
                       help="multiclass confusion under one sampling regime")
    p.add_argument("--features", required=True)
    p.add_argument("--sampling", choices=list(REGIMES), default="none")
    p.add_argument("--smote-k", type=int, default=3)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _protocol_flags(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("communities",
                       help="partitions under all four regimes, plus overlap")
    p.add_argument("--features", required=True)
    p.add_argument("--smote-k", type=int, default=3)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _protocol_flags(p)
    p.set_defaults(func=_cmd_communities)

    p = sub.add_parser("all", help="gen -> featurize -> classify -> communities")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count-per-class", type=int, default=60)
    p.add_argument("--n-range", default="200:1000", metavar="LO:HI")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--sampling", choices=list(REGIMES), default="none")
    p.add_argument("--smote-k", type=int, default=3)
    p.add_argument("--ensemble-size", type=int, default=100)
    p.add_argument("--swaps-per-edge", type=int, default=10)
    p.add_argument("--sp-norm", choices=["euclidean", "squared-sum"],
                   default="euclidean")
    p.add_argument("--counting", choices=["induced", "subgraph"],
                   default="induced")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--min-class-size", type=int, default=7)
    _thread_flag(p)
    p.set_defaults(func=_cmd_all)
    return parser


def _thread_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--min-class-size", type=int, default=7)
    _thread_flag(p)


def _forest_config(args) -> ForestConfig:
    return ForestConfig(trees=args.trees,
                        features_per_split=args.features_per_split,
                        max_depth=args.max_depth,
                        min_leaf=args.min_leaf)


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path: str, obj) -> None:
    _write(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


# --- gen --------------------------------------------------------------------

def _parse_params(text: str) -> dict:
    """key=value pairs; values int, float, or lo:hi integer range."""
    params: dict = {}
    if not text.strip():
        return params
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad parameter {part!r}; expected key=value")
        key, raw = part.split("=", 1)
        key = key.strip()
        raw = raw.strip()
        if ":" in raw:
            lo_s, hi_s = raw.split(":", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo > hi:
                raise ValueError(f"range {raw!r} for {key!r} has lo > hi")
            params[key] = (lo, hi)
        else:
            try:
                params[key] = int(raw)
            except ValueError:
                params[key] = float(raw)
    return params


def _resolve_params(model: str, template: dict, rng) -> dict:
    """Draw range parameters, then turn er mean_degree into p."""
    resolved: dict = {}
    for key in sorted(template):
        value = template[key]
        if isinstance(value, tuple):
            lo, hi = value
            resolved[key] = int(rng.integers(lo, hi + 1))
        else:
            resolved[key] = value
    if model == "er" and "mean_degree" in resolved:
        md = float(resolved.pop("mean_degree"))
        n = int(resolved.get("n", 0))
        if n < 2:
            raise ValueError("er: mean_degree needs n >= 2")
        resolved["p"] = min(1.0, md / (n - 1))
    return resolved


def _gen_graphs(model: str, label: str, template: dict, count: int,
                seed: int) -> list[dict]:
    """Generate one class; returns manifest entries with files unwritten."""
    entries = []
    for i in range(count):
        rng = rng_mod.derive(seed, "gen", label, i, "params")
        params = _resolve_params(model, template, rng)
        gseed = rng_mod.child_seed(seed, "gen", label, i)
        spec = GraphSpec(model, params, gseed)
        graph = generate(spec)
        entries.append({
            "file": f"{label}_{i:04d}.gml",
            "label": label,
            "model": model,
            "params": params,
            "seed": gseed,
            "_graph": graph,
        })
    return entries


def _write_corpus(outdir: str, entries: list[dict], config: dict) -> None:
    os.makedirs(outdir, exist_ok=True)
    manifest = []
    for entry in entries:
        graph = entry.pop("_graph")
        _write(os.path.join(outdir, entry["file"]), write_gml(graph))
        manifest.append(entry)
    _write_json(os.path.join(outdir, "manifest.json"),
                {"command": "gen", "config": config, "graphs": manifest})


def _cmd_gen(args) -> int:
    label = args.label or args.model
    template = _parse_params(args.params)
    entries = _gen_graphs(args.model, label, template, args.count, args.seed)
    config = {"model": args.model, "label": label, "params": args.params,
              "count": args.count, "seed": args.seed}
    _write_corpus(args.out, entries, config)
    return 0


# --- featurize ---------------------------------------------------------------

def _featurize_item(payload) -> tuple[int, dict, dict]:
    (idx, name, label, graph, size, swaps, seed, counting, norm,
     drop_isolated) = payload
    g = drop_isolated_nodes(graph) if drop_isolated else graph
    espec = EnsembleSpec(size=size, swaps_per_edge=swaps, seed=seed)
    vec, report = featurize(g, espec, counting=counting, norm=norm)
    row = _feature_row(name, label, g.node_count, g.edge_count, vec)
    return idx, row, _report_obj(report)


def _feature_row(name: str, label: str, nodes: int, edges: int,
                 vec: FeatureVector) -> dict:
    row = {"file": name, "label": label,
           "n": str(nodes), "m": str(edges),
           "clustering": repr(vec.clustering),
           "assortativity": "" if vec.assortativity is None
           else repr(vec.assortativity)}
    for i, col in enumerate(("sp1", "sp2", "sp3", "sp4", "sp5", "sp6")):
        row[col] = repr(vec.sp[i])
    return row


def _report_obj(report: ZScoreReport) -> dict:
    return {"original": list(report.original),
            "mean": list(report.mean),
            "std": list(report.std),
            "z": list(report.z),
            "ensemble_size": report.ensemble_size}


def _load_manifest_entries(manifest_path: str) -> list[dict]:
    doc = json.loads(_read_text(manifest_path))
    entries = doc["graphs"] if isinstance(doc, dict) else doc
    out = []
    for entry in entries:
        out.append({"file": entry["file"], "label": entry.get("label", "")})
    if not out:
        raise ValueError(f"{manifest_path}: no graphs listed")
    return out


def _run_featurize(indir: str, manifest_path: str, out_csv: str, *,
                   ensemble_size: int, swaps_per_edge: int, seed: int,
                   sp_norm: str, counting: str, drop_isolated: bool,
                   threads: int) -> None:
    entries = _load_manifest_entries(manifest_path)
    payloads = []
    for idx, entry in enumerate(entries):
        name = entry["file"]
        graph = load_gml(_read_text(os.path.join(indir, name)))
        gseed = rng_mod.child_seed(seed, "featurize", name)
        payloads.append((idx, name, entry["label"], graph, ensemble_size,
                         swaps_per_edge, gseed, counting, sp_norm,
                         drop_isolated))
    if threads <= 1:
        results = [_featurize_item(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunk = max(1, math.ceil(len(payloads) / (threads * 4)))
            results = list(pool.map(_featurize_item, payloads,
                                    chunksize=chunk))
    results.sort(key=lambda r: r[0])
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(pl.FEATURES_HEADER)
    reports = {}
    for idx, row, report in results:
        writer.writerow([row[col] for col in pl.FEATURES_HEADER])
        reports[row["file"]] = report
    _write(out_csv, out.getvalue())
    meta = {"command": "featurize",
            "config": {"in": indir, "manifest": manifest_path,
                       "ensemble_size": ensemble_size,
                       "swaps_per_edge": swaps_per_edge, "seed": seed,
                       "sp_norm": sp_norm, "counting": counting,
                       "drop_isolated": drop_isolated},
            "reports": reports}
    _write_json(_meta_path(out_csv), meta)


def _meta_path(out_csv: str) -> str:
    base = out_csv[:-4] if out_csv.endswith(".csv") else out_csv
    return base + ".meta.json"


def _cmd_featurize(args) -> int:
    manifest = args.manifest or os.path.join(args.indir, "manifest.json")
    _run_featurize(args.indir, manifest, args.out,
                   ensemble_size=args.ensemble_size,
                   swaps_per_edge=args.swaps_per_edge, seed=args.seed,
                   sp_norm=args.sp_norm, counting=args.counting,
                   drop_isolated=args.drop_isolated, threads=args.threads)
    return 0


# --- importance ---------------------------------------------------------------

def _cmd_importance(args) -> int:
    data = pl.load_features_csv(args.features)
    cfg = _forest_config(args)
    hist = pl.run_binary_importance(
        data, args.target, args.runs, cfg, args.seed,
        train_fraction=args.train_fraction,
        min_target=args.min_class_size, threads=args.threads)
    _write(os.path.join(args.out, "rank_histogram.csv"),
           pl.rank_histogram_csv(hist))
    _write_json(os.path.join(args.out, "importance.json"),
                {"target": hist.target, "runs": hist.runs,
                 "mean_auc": hist.mean_auc, "aucs": list(hist.aucs)})
    _write_json(os.path.join(args.out, "run_manifest.json"),
                {"command": "importance",
                 "config": _protocol_config(args,
                                            {"target": args.target}),
                 "class_counts": data.class_counts()})
    return 0


def _protocol_config(args, extra: dict) -> dict:
    config = {"features": args.features, "runs": args.runs,
              "seed": args.seed, "trees": args.trees,
              "features_per_split": args.features_per_split,
              "max_depth": args.max_depth, "min_leaf": args.min_leaf,
              "train_fraction": args.train_fraction,
              "min_class_size": args.min_class_size}
    config.update(extra)
    return config


# --- classify -----------------------------------------------------------------

def _classify_outputs(outdir: str, agg: pl.ConfusionAggregate) -> None:
    net = pl.build_similarity_network(agg)
    _write(os.path.join(outdir, "confusion_mean.csv"),
           pl.matrix_csv(agg.labels, agg.mean_counts))
    _write(os.path.join(outdir, "confusion_norm.csv"),
           pl.matrix_csv(agg.labels, agg.row_normalized))
    _write(os.path.join(outdir, "similarity.csv"),
           pl.matrix_csv(agg.labels, agg.similarity))
    _write(os.path.join(outdir, "similarity.gml"), pl.similarity_gml(net))
    _write(os.path.join(outdir, "similarity.dot"), pl.similarity_dot(net))


def _cmd_classify(args) -> int:
    data = pl.load_features_csv(args.features)
    cfg = _forest_config(args)
    agg = pl.run_multiclass_confusion(
        data, args.sampling, args.runs, cfg, args.seed,
        train_fraction=args.train_fraction,
        min_class_size=args.min_class_size,
        smote_k=args.smote_k, threads=args.threads)
    _classify_outputs(args.out, agg)
    _write_json(os.path.join(args.out, "run_manifest.json"),
                {"command": "classify",
                 "config": _protocol_config(
                     args, {"sampling": args.sampling,
                            "smote_k": args.smote_k}),
                 "labels": list(agg.labels),
                 "class_counts": data.class_counts(),
                 "dropped": [list(d) for d in agg.dropped],
                 "zero_rows": list(agg.zero_rows)})
    return 0


# --- communities ----------------------------------------------------------------

def _cmd_communities(args) -> int:
    data = pl.load_features_csv(args.features)
    cfg = _forest_config(args)
    partitions = {}
    communities_obj = {}
    outdir = args.out
    labels_ref = None
    for regime in REGIMES:
        agg = pl.run_multiclass_confusion(
            data, regime, args.runs, cfg, args.seed,
            train_fraction=args.train_fraction,
            min_class_size=args.min_class_size,
            smote_k=args.smote_k, threads=args.threads)
        labels_ref = agg.labels
        net = pl.build_similarity_network(agg)
        _write(os.path.join(outdir, f"similarity_{regime}.csv"),
               pl.matrix_csv(agg.labels, agg.similarity))
        _write(os.path.join(outdir, f"similarity_{regime}.gml"),
               pl.similarity_gml(net))
        _write(os.path.join(outdir, f"similarity_{regime}.dot"),
               pl.similarity_dot(net))
        part = pl.detect_communities(net)
        partitions[regime] = part
        communities_obj[regime] = {
            "assignment": dict(sorted(part.assignment.items())),
            "modularity": part.modularity,
            "groups": [list(g) for g in part.groups()]}
    overlap = pl.community_overlap([partitions[r] for r in REGIMES])
    _write_json(os.path.join(outdir, "communities.json"),
                {"command": "communities", "regimes": communities_obj})
    _write(os.path.join(outdir, "overlap.csv"),
           pl.matrix_csv(overlap.labels, overlap.counts))
    _write_json(os.path.join(outdir, "run_manifest.json"),
                {"command": "communities",
                 "config": _protocol_config(
                     args, {"smote_k": args.smote_k}),
                 "labels": list(labels_ref or ()),
                 "class_counts": data.class_counts()})
    return 0


# --- all ------------------------------------------------------------------------

def _cmd_all(args) -> int:
    lo_hi = args.n_range.split(":", 1)
    if len(lo_hi) != 2:
        raise ValueError(f"--n-range must be LO:HI, got {args.n_range!r}")
    n_range = f"{int(lo_hi[0])}:{int(lo_hi[1])}"
    corpus_dir = os.path.join(args.out, "corpus")
    entries = []
    for model, base in DEFAULT_CORPUS:
        template = dict(base)
        template["n"] = (int(lo_hi[0]), int(lo_hi[1]))
        entries.extend(_gen_graphs(model, model, template,
                                   args.count_per_class, args.seed))
    config = {"count_per_class": args.count_per_class, "n_range": n_range,
              "seed": args.seed}
    _write_corpus(corpus_dir, entries, config)

    features_csv = os.path.join(args.out, "features.csv")
    _run_featurize(corpus_dir, os.path.join(corpus_dir, "manifest.json"),
                   features_csv,
                   ensemble_size=args.ensemble_size,
                   swaps_per_edge=args.swaps_per_edge, seed=args.seed,
                   sp_norm=args.sp_norm, counting=args.counting,
                   drop_isolated=False, threads=args.threads)

    ns = argparse.Namespace(**vars(args))
    ns.features = features_csv
    ns.out = os.path.join(args.out, "classify")
    _cmd_classify(ns)
    ns = argparse.Namespace(**vars(args))
    ns.features = features_csv
    ns.out = os.path.join(args.out, "communities")
    _cmd_communities(ns)
    return 0


if __name__ == "__main__":
    sys.exit(main())

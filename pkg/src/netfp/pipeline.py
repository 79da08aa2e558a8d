"""The two experimental protocols and the similarity/community machinery.

Protocol one: repeated binary one-vs-rest classification recording AUC
and feature-importance rankings.  Protocol two: repeated multiclass
classification under a sampling regime, accumulating test confusion
counts.  The averaged confusion becomes a similarity network (row
normalization, then max symmetrization), which greedy modularity
agglomeration cuts into communities; co-membership across partitions
gives the overlap matrix.

Runs are embarrassingly parallel: every run derives its streams from
(master seed, run index), and confusion accumulation is an integer sum,
so results are identical at any worker count.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng as rng_mod
from .graph import Graph
from .learner import (ForestConfig, auc, fit_forest_arrays,
                      stratified_indices)
from .sampling import (DataPoint, LabeledDataset, Standardizer, apply_regime)

FEATURES_HEADER = ("file", "label", "n", "m", "clustering",
                   "assortativity", "sp1", "sp2", "sp3", "sp4", "sp5", "sp6")
FEATURE_COLUMNS = FEATURES_HEADER[4:]
DEFAULT_MIN_CLASS = 7
DEFAULT_TRAIN_FRACTION = 0.7


# --- dataset assembly ------------------------------------------------------

def dataset_from_rows(rows: Iterable[Mapping[str, str]]) -> LabeledDataset:
    """Rows of a features table -> labeled points.

    The undefined-assortativity marker (empty cell) is imputed to 0 here,
    at assembly, so downstream code only ever sees reals.
    """
    points = []
    for row in rows:
        x = []
        for col in FEATURE_COLUMNS:
            cell = row[col].strip()
            if col == "assortativity" and cell == "":
                x.append(0.0)
            else:
                x.append(float(cell))
        points.append(DataPoint(tuple(x), row["label"], row["file"]))
    return LabeledDataset(tuple(points))


def load_features_csv(path: str) -> LabeledDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(FEATURES_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return dataset_from_rows(reader)


# --- protocol one: binary importance ---------------------------------------

@dataclass(frozen=True)
class RankHistogram:
    feature_names: tuple[str, ...]
    counts: np.ndarray          # counts[f][r]: runs where feature f had rank r
    aucs: tuple[float, ...]
    mean_auc: float
    target: str
    runs: int


def _binary_run(X: np.ndarray, y: np.ndarray, cfg: ForestConfig,
                train_fraction: float, seed: int, run: int,
                ) -> tuple[list[int], float]:
    split_rng = rng_mod.derive(seed, "bin", run, "split")
    train_idx, test_idx = stratified_indices(
        ["target" if v else "rest" for v in y.tolist()],
        train_fraction, split_rng)
    forest = fit_forest_arrays(
        X[train_idx], y[train_idx], ("rest", "target"), cfg,
        rng_mod.child_seed(seed, "bin", run, "forest"))
    scores = forest.predict_scores(X[test_idx])[:, 1]
    run_auc = auc(scores, y[test_idx])
    assert run_auc is not None  # stratification puts both classes in test
    return forest.importance_ranking(), run_auc


def _binary_chunk(payload) -> list[tuple[int, list[int], float]]:
    X, y, cfg, train_fraction, seed, run_ids = payload
    out = []
    for run in run_ids:
        ranking, run_auc = _binary_run(X, y, cfg, train_fraction, seed, run)
        out.append((run, ranking, run_auc))
    return out


def run_binary_importance(data: LabeledDataset, target: str, runs: int,
                          cfg: ForestConfig, seed: int, *,
                          train_fraction: float = DEFAULT_TRAIN_FRACTION,
                          min_target: int = DEFAULT_MIN_CLASS,
                          threads: int = 1) -> RankHistogram:
    """Repeated target-vs-rest classification; AUCs and rank frequencies."""
    counts = data.class_counts()
    have = counts.get(target, 0)
    if have < min_target:
        raise ValueError(
            f"target class {target!r} has {have} instance(s); need >= {min_target}")
    if len(data) - have < 2:
        raise ValueError(f"fewer than 2 non-{target!r} instances")
    X = data.matrix()
    y = np.array([1 if p.label == target else 0 for p in data.points],
                 dtype=np.int64)
    results = _map_runs(_binary_chunk, (X, y, cfg, train_fraction, seed),
                        runs, threads)
    d = X.shape[1]
    rank_counts = np.zeros((d, d), dtype=np.int64)
    aucs = [0.0] * runs
    for run, ranking, run_auc in results:
        for rank_pos, f in enumerate(ranking):
            rank_counts[f, rank_pos] += 1
        aucs[run] = run_auc
    names = FEATURE_COLUMNS if d == len(FEATURE_COLUMNS) else tuple(
        f"f{i}" for i in range(d))
    return RankHistogram(tuple(names), rank_counts, tuple(aucs),
                         float(np.mean(aucs)), target, runs)


# --- protocol two: multiclass confusion ------------------------------------

@dataclass(frozen=True)
class ConfusionAggregate:
    labels: tuple[str, ...]
    runs: int
    total_counts: np.ndarray     # int64, rows true class, cols predicted
    mean_counts: np.ndarray
    row_normalized: np.ndarray
    similarity: np.ndarray
    zero_rows: tuple[int, ...]
    dropped: tuple[tuple[str, int], ...]


def _confusion_run(X: np.ndarray, y: np.ndarray, pids: tuple[str, ...],
                   labels: tuple[str, ...], regime: str, smote_k: int,
                   cfg: ForestConfig, train_fraction: float, seed: int,
                   run: int) -> tuple[np.ndarray, tuple[str, ...]]:
    """One split/sample/train/test cycle; returns (counts, test pids)."""
    C = len(labels)
    split_rng = rng_mod.derive(seed, "mc", run, "split")
    train_idx, test_idx = stratified_indices(y.tolist(), train_fraction,
                                             split_rng)
    scaler = Standardizer.fit(X[train_idx])
    X_train = scaler.transform(X[train_idx])
    X_test = scaler.transform(X[test_idx])
    train_points = tuple(
        DataPoint(tuple(float(v) for v in X_train[k]),
                  labels[y[i]], pids[i])
        for k, i in enumerate(train_idx))
    # sampling sees only the training split; the test multiset stays the
    # stratified split, untouched (the returned pids let tests assert it)
    sampled = apply_regime(LabeledDataset(train_points), regime,
                           rng_mod.child_seed(seed, "mc", run, "sample"),
                           smote_k)
    lookup = {c: i for i, c in enumerate(labels)}
    X_s = sampled.matrix()
    y_s = np.array([lookup[p.label] for p in sampled.points], dtype=np.int64)
    forest = fit_forest_arrays(X_s, y_s, labels, cfg,
                               rng_mod.child_seed(seed, "mc", run, "forest"))
    pred = forest.predict_indices(X_test)
    conf = np.zeros((C, C), dtype=np.int64)
    np.add.at(conf, (y[test_idx], pred), 1)
    return conf, tuple(pids[i] for i in test_idx)


def _confusion_chunk(payload) -> np.ndarray:
    (X, y, pids, labels, regime, smote_k, cfg, train_fraction, seed,
     run_ids) = payload
    C = len(labels)
    total = np.zeros((C, C), dtype=np.int64)
    for run in run_ids:
        conf, _ = _confusion_run(X, y, pids, labels, regime, smote_k, cfg,
                                 train_fraction, seed, run)
        total += conf
    return total


def filter_small_classes(data: LabeledDataset, min_size: int,
                         ) -> tuple[LabeledDataset, tuple[tuple[str, int], ...]]:
    counts = data.class_counts()
    dropped = tuple(sorted((lab, c) for lab, c in counts.items()
                           if c < min_size))
    if not dropped:
        return data, ()
    keep = tuple(p for p in data.points if counts[p.label] >= min_size)
    return LabeledDataset(keep), dropped


def run_multiclass_confusion(data: LabeledDataset, sampling: str, runs: int,
                             cfg: ForestConfig, seed: int, *,
                             train_fraction: float = DEFAULT_TRAIN_FRACTION,
                             min_class_size: int = DEFAULT_MIN_CLASS,
                             smote_k: int = 3,
                             threads: int = 1) -> ConfusionAggregate:
    """Accumulate test confusion over `runs` cycles of one sampling regime."""
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    kept, dropped = filter_small_classes(data, min_class_size)
    labels = kept.labels() if kept.points else ()
    if len(labels) < 2:
        names = ", ".join(f"{lab} ({c})" for lab, c in dropped) or "none"
        raise ValueError(
            f"fewer than 2 classes with >= {min_class_size} instances "
            f"remain; dropped: {names}")
    lookup = {c: i for i, c in enumerate(labels)}
    X = kept.matrix()
    y = np.array([lookup[p.label] for p in kept.points], dtype=np.int64)
    pids = tuple(p.pid for p in kept.points)
    chunks = _map_runs(_confusion_chunk,
                       (X, y, pids, labels, sampling, smote_k, cfg,
                        train_fraction, seed),
                       runs, threads, reduce_chunks=True)
    total = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for part in chunks:
        total += part
    return aggregate_confusion(labels, total, runs, dropped)


def aggregate_confusion(labels: tuple[str, ...], total: np.ndarray,
                        runs: int,
                        dropped: tuple[tuple[str, int], ...] = (),
                        ) -> ConfusionAggregate:
    mean = total / float(runs)
    row_sums = mean.sum(axis=1)
    zero_rows = tuple(int(i) for i in np.nonzero(row_sums == 0)[0])
    safe = np.where(row_sums == 0, 1.0, row_sums)
    norm = mean / safe[:, None]
    sim = np.maximum(norm, norm.T)
    return ConfusionAggregate(labels, runs, total, mean, norm, sim,
                              zero_rows, dropped)


def _map_runs(chunk_fn, base_payload: tuple, runs: int, threads: int,
              reduce_chunks: bool = False):
    """Split run ids into chunks and execute, in-process or in a pool.

    Chunk boundaries never affect results (streams are keyed by run id),
    only scheduling.
    """
    run_ids = list(range(runs))
    if threads <= 1:
        out = chunk_fn(base_payload + (run_ids,))
        return [out] if reduce_chunks else out
    per = max(1, math.ceil(runs / (threads * 4)))
    payloads = [base_payload + (run_ids[i:i + per],)
                for i in range(0, runs, per)]
    results = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(chunk_fn, payloads):
            results.append(part)
    if reduce_chunks:
        return results
    merged = []
    for part in results:
        merged.extend(part)
    return merged


# --- similarity network and communities ------------------------------------

@dataclass(frozen=True)
class SimilarityNetwork:
    labels: tuple[str, ...]
    weights: np.ndarray          # symmetric, zero diagonal
    graph: Graph


@dataclass(frozen=True)
class Partition:
    assignment: Mapping[str, int]   # label -> community id, contiguous from 0
    modularity: float

    def groups(self) -> list[tuple[str, ...]]:
        by_cid: dict[int, list[str]] = {}
        for label, cid in self.assignment.items():
            by_cid.setdefault(cid, []).append(label)
        return [tuple(sorted(by_cid[cid])) for cid in sorted(by_cid)]


@dataclass(frozen=True)
class Overlap:
    labels: tuple[str, ...]
    counts: np.ndarray


def build_similarity_network(agg: ConfusionAggregate) -> SimilarityNetwork:
    """Node per class; edge (i, j), i != j, wherever similarity > 0."""
    C = len(agg.labels)
    w = np.array(agg.similarity, dtype=np.float64)
    np.fill_diagonal(w, 0.0)
    edges = {(i, j) for i in range(C) for j in range(i + 1, C) if w[i, j] > 0}
    graph = Graph(C, frozenset(edges),
                  {i: lab for i, lab in enumerate(agg.labels)})
    return SimilarityNetwork(agg.labels, w, graph)


def modularity(weights: np.ndarray, assignment: Sequence[int]) -> float:
    """Q = (1/2W) sum_ij (w_ij - k_i k_j / 2W) delta(c_i, c_j)."""
    w = np.asarray(weights, dtype=np.float64)
    two_w = float(w.sum())
    if two_w == 0.0:
        return 0.0
    k = w.sum(axis=1)
    cid = np.asarray(assignment)
    same = cid[:, None] == cid[None, :]
    return float(((w - np.outer(k, k) / two_w) * same).sum() / two_w)


def detect_communities(net: SimilarityNetwork) -> Partition:
    """Greedy weighted modularity agglomeration (merge best pair until no
    merge improves Q); ties break toward the lowest community pair."""
    C = len(net.labels)
    if C == 0:
        return Partition({}, 0.0)
    w = np.array(net.weights, dtype=np.float64)
    np.fill_diagonal(w, 0.0)
    assert np.array_equal(w, w.T), "similarity weights must be symmetric"
    two_w = float(w.sum())
    comm = list(range(C))  # community id per node, id = lowest member
    if two_w > 0.0:
        e = w / two_w
        a = e.sum(axis=1)
        alive = sorted(set(comm))
        while len(alive) > 1:
            best_gain = 1e-12
            best_pair = None
            for ii in range(len(alive)):
                i = alive[ii]
                for jj in range(ii + 1, len(alive)):
                    j = alive[jj]
                    if e[i, j] <= 0.0:
                        continue
                    gain = 2.0 * (e[i, j] - a[i] * a[j])
                    if gain > best_gain:
                        best_gain = gain
                        best_pair = (i, j)
            if best_pair is None:
                break
            i, j = best_pair
            e[i, :] += e[j, :]
            e[:, i] += e[:, j]
            e[j, :] = 0.0
            e[:, j] = 0.0
            a[i] += a[j]
            a[j] = 0.0
            comm = [i if c == j else c for c in comm]
            alive.remove(j)
    # contiguous ids in label order
    remap: dict[int, int] = {}
    assignment: dict[str, int] = {}
    for node, label in enumerate(net.labels):
        rep = comm[node]
        if rep not in remap:
            remap[rep] = len(remap)
        assignment[label] = remap[rep]
    q = modularity(w, [assignment[lab] for lab in net.labels])
    return Partition(assignment, q)


def community_overlap(partitions: Sequence[Partition]) -> Overlap:
    """overlap[i][j] = number of partitions placing i and j together."""
    if not partitions:
        raise ValueError("need at least one partition")
    label_set = set(partitions[0].assignment)
    for p in partitions[1:]:
        if set(p.assignment) != label_set:
            raise ValueError("partitions cover different label sets")
    labels = tuple(sorted(label_set))
    C = len(labels)
    counts = np.zeros((C, C), dtype=np.int64)
    for p in partitions:
        cids = np.array([p.assignment[lab] for lab in labels])
        counts += (cids[:, None] == cids[None, :]).astype(np.int64)
    return Overlap(labels, counts)


# --- text renderings --------------------------------------------------------

def matrix_csv(labels: Sequence[str], matrix: np.ndarray) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["label", *labels])
    arr = np.asarray(matrix)
    for i, lab in enumerate(labels):
        cells = [_cell(v) for v in arr[i]]
        writer.writerow([lab, *cells])
    return out.getvalue()


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def similarity_gml(net: SimilarityNetwork) -> str:
    lines = ["graph ["]
    for i, lab in enumerate(net.labels):
        lines += ["  node [", f"    id {i}",
                  f'    label "{_gml_escape(lab)}"', "  ]"]
    for u, v in sorted(net.graph.edges):
        lines += ["  edge [", f"    source {u}", f"    target {v}",
                  f"    weight {repr(float(net.weights[u, v]))}", "  ]"]
    lines.append("]")
    return "\n".join(lines) + "\n"


def _gml_escape(s: str) -> str:
    return s.replace('"', "&quot;")


def similarity_dot(net: SimilarityNetwork) -> str:
    lines = ["graph similarity {"]
    for i, lab in enumerate(net.labels):
        lines.append(f'  n{i} [label="{lab}"];')
    for u, v in sorted(net.graph.edges):
        lines.append(f"  n{u} -- n{v} [weight={repr(float(net.weights[u, v]))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def rank_histogram_csv(hist: RankHistogram) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    d = len(hist.feature_names)
    writer.writerow(["feature", *[f"rank{r + 1}" for r in range(d)]])
    for f, name in enumerate(hist.feature_names):
        writer.writerow([name, *[str(int(c)) for c in hist.counts[f]]])
    return out.getvalue()

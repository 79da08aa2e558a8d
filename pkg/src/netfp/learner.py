"""From-scratch decision trees and random forest with Gini importance.

Trees split on midpoint thresholds over a random feature subset per
node, maximizing count-weighted Gini decrease; the forest bags bootstrap
samples with per-tree derived streams and accumulates impurity decreases
into a normalized importance vector.  Every tie (threshold, vote, rank)
breaks toward the lowest index so training and prediction are exactly
reproducible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as rng_mod
from .sampling import LabeledDataset


def gini(fractions: Sequence[float]) -> float:
    """Gini impurity 1 - sum(f^2) of a class-fraction tuple."""
    arr = np.asarray(fractions, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("fractions must be a nonempty 1-d sequence")
    if (arr < 0).any():
        raise ValueError("fractions must be nonnegative")
    if abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {float(arr.sum())}")
    return float(1.0 - (arr * arr).sum())


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (counts)."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    counts: tuple[int, ...] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None


@dataclass(frozen=True)
class ForestConfig:
    trees: int = 100
    features_per_split: int | None = None  # None: ceil(sqrt(n_features))
    max_depth: int | None = None
    min_leaf: int = 1

    def __post_init__(self) -> None:
        if self.trees < 1:
            raise ValueError(f"trees must be >= 1, got {self.trees}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")

    def resolved_subset(self, n_features: int) -> int:
        if self.features_per_split is None:
            return min(n_features, math.isqrt(n_features - 1) + 1) \
                if n_features > 1 else 1
        return min(self.features_per_split, n_features)


def _weighted_impurity(counts: np.ndarray, total: int) -> float:
    # total * gini(counts/total), in one shot to dodge needless division
    if total == 0:
        return 0.0
    return total - float((counts * counts).sum()) / total


def _fit_node(X: np.ndarray, y: np.ndarray, idx: np.ndarray, depth: int,
              cfg: ForestConfig, rng: np.random.Generator, n_classes: int,
              importance: np.ndarray) -> TreeNode:
    counts = np.bincount(y[idx], minlength=n_classes)
    node_total = idx.size
    if ((counts > 0).sum() <= 1
            or node_total < 2 * cfg.min_leaf
            or (cfg.max_depth is not None and depth >= cfg.max_depth)):
        return TreeNode(counts=tuple(int(c) for c in counts))

    n_features = X.shape[1]
    subset_size = cfg.resolved_subset(n_features)
    feats = np.sort(rng.choice(n_features, size=subset_size, replace=False))
    parent_w = _weighted_impurity(counts, node_total)

    best_dec = 0.0
    best_feature = -1
    best_threshold = 0.0
    for f in feats.tolist():
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        ys_sorted = y[idx][order]
        left_counts = np.zeros(n_classes, dtype=np.int64)
        for pos in range(1, node_total):
            left_counts[ys_sorted[pos - 1]] += 1
            if xs_sorted[pos] == xs_sorted[pos - 1]:
                continue
            if pos < cfg.min_leaf or node_total - pos < cfg.min_leaf:
                continue
            right_counts = counts - left_counts
            child_w = (_weighted_impurity(left_counts, pos)
                       + _weighted_impurity(right_counts, node_total - pos))
            dec = parent_w - child_w
            # strict > keeps the first (lowest feature, lowest threshold)
            # candidate on ties
            if dec > best_dec + 1e-12:
                best_dec = dec
                best_feature = f
                best_threshold = (float(xs_sorted[pos - 1])
                                  + float(xs_sorted[pos])) / 2.0
    if best_feature < 0:
        return TreeNode(counts=tuple(int(c) for c in counts))

    importance[best_feature] += best_dec
    mask = X[idx, best_feature] <= best_threshold
    left_idx = idx[mask]
    right_idx = idx[~mask]
    left = _fit_node(X, y, left_idx, depth + 1, cfg, rng, n_classes, importance)
    right = _fit_node(X, y, right_idx, depth + 1, cfg, rng, n_classes, importance)
    return TreeNode(feature=best_feature, threshold=best_threshold,
                    left=left, right=right)


def _leaf_for(node: TreeNode, x: np.ndarray) -> tuple[int, ...]:
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.counts  # type: ignore[return-value]


def _tree_vote(node: TreeNode, x: np.ndarray) -> int:
    counts = _leaf_for(node, x)
    best = 0
    for i in range(1, len(counts)):
        if counts[i] > counts[best]:
            best = i
    return best


@dataclass
class ForestModel:
    classes: tuple[str, ...]
    n_features: int
    trees: list[TreeNode]
    raw_importance: np.ndarray
    config: ForestConfig
    seed: int

    @property
    def importances(self) -> np.ndarray:
        total = float(self.raw_importance.sum())
        if total <= 0.0:
            return np.zeros_like(self.raw_importance)
        return self.raw_importance / total

    def importance_ranking(self) -> list[int]:
        """Feature ids by descending importance, ties by lowest id."""
        imp = self.importances
        return sorted(range(self.n_features), key=lambda f: (-imp[f], f))

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        votes = np.zeros((X.shape[0], len(self.classes)), dtype=np.int64)
        for tree in self.trees:
            for r in range(X.shape[0]):
                votes[r, _tree_vote(tree, X[r])] += 1
        return votes / float(len(self.trees))

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        scores = self.predict_scores(X)
        return scores.argmax(axis=1)  # argmax takes the lowest index on ties

    def predict(self, X: np.ndarray) -> list[str]:
        return [self.classes[i] for i in self.predict_indices(X)]


def _check_matrix(X: np.ndarray, arity: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != arity:
        raise ValueError(f"expected {arity} features, got {X.shape[1]}")
    return X


def fit_forest_arrays(X: np.ndarray, y: np.ndarray, classes: tuple[str, ...],
                      cfg: ForestConfig, seed: int) -> ForestModel:
    """Core trainer on arrays; y holds class indices into `classes`."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix must be nonempty and 2-d")
    if X.shape[0] != y.shape[0]:
        raise ValueError("feature and label counts differ")
    n = X.shape[0]
    importance = np.zeros(X.shape[1], dtype=np.float64)
    trees: list[TreeNode] = []
    for t in range(cfg.trees):
        rng = rng_mod.derive(seed, "tree", t)
        bootstrap = np.sort(rng.integers(0, n, size=n))
        trees.append(_fit_node(X, y, bootstrap, 0, cfg, rng,
                               len(classes), importance))
    return ForestModel(classes, X.shape[1], trees, importance, cfg, seed)


def _split_dataset(train: LabeledDataset) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    classes = train.labels()
    lookup = {c: i for i, c in enumerate(classes)}
    y = np.array([lookup[p.label] for p in train.points], dtype=np.int64)
    return train.matrix(), y, classes


def train_tree(train: LabeledDataset, cfg: ForestConfig, seed: int) -> TreeNode:
    """One tree on the data as given (no bootstrap)."""
    if not train.points:
        raise ValueError("training set is empty")
    X, y, classes = _split_dataset(train)
    importance = np.zeros(X.shape[1], dtype=np.float64)
    rng = rng_mod.derive(seed, "tree", 0)
    return _fit_node(X, y, np.arange(X.shape[0]), 0, cfg, rng,
                     len(classes), importance)


def train_forest(train: LabeledDataset, cfg: ForestConfig, seed: int) -> ForestModel:
    if not train.points:
        raise ValueError("training set is empty")
    X, y, classes = _split_dataset(train)
    return fit_forest_arrays(X, y, classes, cfg, seed)


def predict(model: ForestModel, x: Sequence[float]) -> tuple[str, dict[str, float]]:
    """Single-point prediction: (label, vote fraction per class)."""
    scores = model.predict_scores(np.asarray(x, dtype=np.float64))[0]
    label = model.classes[int(scores.argmax())]
    return label, {c: float(s) for c, s in zip(model.classes, scores)}


def auc(scores: Sequence[float], truths: Sequence[int]) -> float | None:
    """Mann-Whitney AUC; ties count half.  None when one class is absent."""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truths)
    if s.shape != t.shape or s.ndim != 1:
        raise ValueError("scores and truths must be equal-length 1-d sequences")
    pos = int((t == 1).sum())
    neg = int(t.size - pos)
    if pos == 0 or neg == 0:
        return None
    order = np.argsort(s, kind="stable")
    ranks = np.empty(t.size, dtype=np.float64)
    i = 0
    while i < t.size:
        j = i
        while j + 1 < t.size and s[order[j + 1]] == s[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[t == 1].sum())
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)


def stratified_split(d: LabeledDataset, fraction: float, seed: int,
                     ) -> tuple[LabeledDataset, LabeledDataset]:
    """Per-class shuffle-and-cut at round(fraction*count), both sides >= 1."""
    train_idx, test_idx = stratified_indices(
        [p.label for p in d.points], fraction, rng_mod.derive(seed, "split"))
    train = LabeledDataset(tuple(d.points[i] for i in train_idx))
    test = LabeledDataset(tuple(d.points[i] for i in test_idx))
    return train, test


def stratified_indices(labels: Sequence, fraction: float,
                       rng: np.random.Generator) -> tuple[list[int], list[int]]:
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    groups: dict = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)
    train: list[int] = []
    test: list[int] = []
    for label in sorted(groups):
        members = groups[label]
        count = len(members)
        if count < 2:
            raise ValueError(
                f"class {label!r} has {count} point(s); need >= 2 to split")
        take = int(math.floor(fraction * count + 0.5))
        take = max(1, min(count - 1, take))
        perm = rng.permutation(count)
        train.extend(members[i] for i in perm[:take].tolist())
        test.extend(members[i] for i in perm[take:].tolist())
    return sorted(train), sorted(test)


# --- model (de)serialization ----------------------------------------------

_FORMAT = "netfp.forest"
_VERSION = 1


def _node_to_obj(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"counts": list(node.counts)}  # type: ignore[arg-type]
    return {"feature": node.feature, "threshold": node.threshold,
            "left": _node_to_obj(node.left), "right": _node_to_obj(node.right)}


def _node_from_obj(obj: dict) -> TreeNode:
    if "counts" in obj:
        return TreeNode(counts=tuple(int(c) for c in obj["counts"]))
    return TreeNode(feature=int(obj["feature"]),
                    threshold=float(obj["threshold"]),
                    left=_node_from_obj(obj["left"]),
                    right=_node_from_obj(obj["right"]))


def model_to_json(model: ForestModel) -> str:
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "classes": list(model.classes),
        "n_features": model.n_features,
        "seed": model.seed,
        "config": {
            "trees": model.config.trees,
            "features_per_split": model.config.features_per_split,
            "max_depth": model.config.max_depth,
            "min_leaf": model.config.min_leaf,
        },
        "raw_importance": [float(v) for v in model.raw_importance],
        "trees": [_node_to_obj(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def model_from_json(text: str) -> ForestModel:
    doc = json.loads(text)
    if doc.get("format") != _FORMAT:
        raise ValueError(f"not a {_FORMAT} document")
    if doc.get("version") != _VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    cfg = ForestConfig(**doc["config"])
    return ForestModel(tuple(doc["classes"]), int(doc["n_features"]),
                       [_node_from_obj(t) for t in doc["trees"]],
                       np.array(doc["raw_importance"], dtype=np.float64),
                       cfg, int(doc["seed"]))

"""Class-imbalance mitigation: random over-sampling, random
under-sampling, and SMOTE interpolation.

All three rebalance a labeled dataset so every class count equals a
common target (the majority count, the minority count, and the majority
count respectively).  Classes are processed in sorted-label order with
per-class derived streams, so results never depend on scheduling.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rng as rng_mod


@dataclass(frozen=True)
class DataPoint:
    x: tuple[float, ...]
    label: str
    pid: str
    duplicate: bool = False
    synthetic: bool = False
    parents: tuple[str, str] | None = None


@dataclass(frozen=True)
class LabeledDataset:
    points: tuple[DataPoint, ...]

    def __post_init__(self) -> None:
        arities = {len(p.x) for p in self.points}
        if len(arities) > 1:
            raise ValueError(f"mixed feature arities {sorted(arities)}")
        seen: set[str] = set()
        for p in self.points:
            if p.synthetic or p.duplicate:
                continue
            if p.pid in seen:
                raise ValueError(f"duplicate provenance id {p.pid!r}")
            seen.add(p.pid)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def arity(self) -> int:
        return len(self.points[0].x) if self.points else 0

    def labels(self) -> tuple[str, ...]:
        return tuple(sorted({p.label for p in self.points}))

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.points:
            counts[p.label] = counts.get(p.label, 0) + 1
        return counts

    def matrix(self) -> np.ndarray:
        return np.array([p.x for p in self.points], dtype=np.float64)

    def by_class(self, label: str) -> list[int]:
        return [i for i, p in enumerate(self.points) if p.label == label]


def _require_points(d: LabeledDataset) -> None:
    if not d.points:
        raise ValueError("dataset is empty")


def oversample(d: LabeledDataset, seed: int) -> LabeledDataset:
    """Pad every minority class with uniform-with-replacement copies of
    its own points until all counts equal the majority count."""
    _require_points(d)
    counts = d.class_counts()
    target = max(counts.values())
    added: list[DataPoint] = []
    for label in sorted(counts):
        need = target - counts[label]
        if need == 0:
            continue
        rng = rng_mod.derive(seed, "oversample", label)
        members = d.by_class(label)
        picks = rng.integers(0, len(members), size=need)
        for i in picks.tolist():
            added.append(replace(d.points[members[i]], duplicate=True))
    return LabeledDataset(d.points + tuple(added))


def undersample(d: LabeledDataset, seed: int) -> LabeledDataset:
    """Shrink every majority class by uniform-without-replacement
    deletion until all counts equal the minimum count."""
    _require_points(d)
    counts = d.class_counts()
    target = min(counts.values())
    keep: set[int] = set()
    for label in sorted(counts):
        members = d.by_class(label)
        if len(members) == target:
            keep.update(members)
            continue
        rng = rng_mod.derive(seed, "undersample", label)
        chosen = rng.choice(len(members), size=target, replace=False)
        keep.update(members[i] for i in chosen.tolist())
    return LabeledDataset(tuple(p for i, p in enumerate(d.points) if i in keep))


def smote(d: LabeledDataset, k: int = 3, seed: int = 0) -> LabeledDataset:
    """Synthesize minority points on segments to nearest same-class
    neighbors until all counts equal the majority count.

    Seed points rotate round-robin through the class in dataset order;
    neighbor distances are Euclidean in standardized feature space with
    ties broken by provenance id; the synthetic point is
    x_i + delta*(x_n - x_i) with delta uniform on [0, 1].
    """
    _require_points(d)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    counts = d.class_counts()
    target = max(counts.values())
    scaler = Standardizer.fit(d.matrix())
    scaled = scaler.transform(d.matrix())
    added: list[DataPoint] = []
    for label in sorted(counts):
        need = target - counts[label]
        if need == 0:
            continue
        members = d.by_class(label)
        if len(members) < 2:
            raise ValueError(
                f"class {label!r} has a single point; SMOTE needs a neighbor")
        rng = rng_mod.derive(seed, "smote", label)
        k_eff = min(k, len(members) - 1)
        # k nearest same-class neighbors of each member, precomputed
        neighbor_lists: list[list[int]] = []
        for i in members:
            others = [(float(np.sum((scaled[i] - scaled[j]) ** 2)),
                       d.points[j].pid, j)
                      for j in members if j != i]
            others.sort()
            neighbor_lists.append([j for _, _, j in others[:k_eff]])
        for t in range(need):
            i_pos = t % len(members)
            i = members[i_pos]
            n_idx = neighbor_lists[i_pos][int(rng.integers(0, k_eff))]
            delta = float(rng.random())
            xi = np.array(d.points[i].x)
            xn = np.array(d.points[n_idx].x)
            new_x = tuple(float(v) for v in xi + delta * (xn - xi))
            added.append(DataPoint(new_x, label,
                                   pid=f"smote:{label}:{t}",
                                   synthetic=True,
                                   parents=(d.points[i].pid, d.points[n_idx].pid)))
    return LabeledDataset(d.points + tuple(added))


REGIMES = ("none", "over", "under", "smote")


def apply_regime(d: LabeledDataset, regime: str, seed: int,
                 smote_k: int = 3) -> LabeledDataset:
    if regime == "none":
        return d
    if regime == "over":
        return oversample(d, seed)
    if regime == "under":
        return undersample(d, seed)
    if regime == "smote":
        return smote(d, smote_k, seed)
    raise ValueError(f"unknown sampling regime {regime!r}; expected one of {REGIMES}")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scaling; parameters fit once and reused elsewhere.

    Constant features keep scale 1 so transforming never divides by zero.
    """

    mean: tuple[float, ...]
    scale: tuple[float, ...]

    @staticmethod
    def fit(X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("need a nonempty 2-d feature matrix")
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        return Standardizer(tuple(float(v) for v in mean),
                            tuple(float(v) for v in scale))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - np.array(self.mean)) / np.array(self.scale)

    def transform_dataset(self, d: LabeledDataset) -> LabeledDataset:
        if not d.points:
            return d
        transformed = self.transform(d.matrix())
        points = tuple(replace(p, x=tuple(float(v) for v in transformed[i]))
                       for i, p in enumerate(d.points))
        return LabeledDataset(points)

"""Oversampling, undersampling, SMOTE, and the standardizer."""
from __future__ import annotations

import numpy as np
import pytest

from netfp.sampling import (DataPoint, LabeledDataset, Standardizer,
                            apply_regime, oversample, smote, undersample)


def make_dataset(spec: dict[str, int], arity: int = 2, offset: float = 0.0,
                 spread: float = 1.0, seed: int = 0) -> LabeledDataset:
    """spec maps label -> count; points get distinct deterministic coords."""
    rng = np.random.default_rng(seed)
    points = []
    for label in sorted(spec):
        for i in range(spec[label]):
            x = tuple(float(v) for v in
                      offset + spread * rng.random(arity))
            points.append(DataPoint(x, label, f"{label}#{i}"))
    return LabeledDataset(tuple(points))


def test_dataset_validation():
    with pytest.raises(ValueError):
        LabeledDataset((DataPoint((1.0,), "a", "p"),
                        DataPoint((1.0, 2.0), "a", "q")))
    with pytest.raises(ValueError):
        LabeledDataset((DataPoint((1.0,), "a", "p"),
                        DataPoint((2.0,), "a", "p")))
    # flagged copies may repeat a pid
    LabeledDataset((DataPoint((1.0,), "a", "p"),
                    DataPoint((1.0,), "a", "p", duplicate=True)))


def test_dataset_accessors():
    d = make_dataset({"a": 3, "b": 5})
    assert len(d) == 8
    assert d.arity == 2
    assert d.labels() == ("a", "b")
    assert d.class_counts() == {"a": 3, "b": 5}
    assert d.matrix().shape == (8, 2)
    assert d.by_class("a") == [0, 1, 2]
    assert LabeledDataset(()).arity == 0


def test_oversample_balances_up():
    d = make_dataset({"a": 10, "b": 4, "c": 7})
    out = oversample(d, seed=5)
    assert out.class_counts() == {"a": 10, "b": 10, "c": 10}
    # originals first, untouched and in order
    assert out.points[:len(d)] == d.points
    for p in out.points[len(d):]:
        assert p.duplicate and not p.synthetic
        assert p.label in ("b", "c")
        # a copy of an actual member of its class
        source = [q for q in d.points if q.pid == p.pid]
        assert len(source) == 1 and source[0].x == p.x


def test_oversample_balanced_input_is_identity():
    d = make_dataset({"a": 4, "b": 4})
    assert oversample(d, seed=1).points == d.points


def test_undersample_balances_down():
    d = make_dataset({"a": 10, "b": 4, "c": 7})
    out = undersample(d, seed=5)
    assert out.class_counts() == {"a": 4, "b": 4, "c": 4}
    kept = set(p.pid for p in out.points)
    assert kept <= {p.pid for p in d.points}
    # survivors keep dataset order
    pids = [p.pid for p in d.points if p.pid in kept]
    assert [p.pid for p in out.points] == pids


def test_smote_counts_and_provenance():
    d = make_dataset({"a": 8, "b": 4})
    out = smote(d, k=2, seed=9)
    assert out.class_counts() == {"a": 8, "b": 8}
    assert out.points[:len(d)] == d.points
    synth = out.points[len(d):]
    assert [p.pid for p in synth] == [f"smote:b:{t}" for t in range(4)]
    members = [p for p in d.points if p.label == "b"]
    for t, p in enumerate(synth):
        assert p.synthetic and not p.duplicate
        assert p.parents is not None
        # seeds rotate round-robin in dataset order
        assert p.parents[0] == members[t % 4].pid


def test_smote_points_lie_on_parent_segments():
    d = make_dataset({"a": 9, "b": 5}, arity=3, seed=4)
    out = smote(d, k=3, seed=11)
    lookup = {p.pid: np.array(p.x) for p in d.points}
    for p in out.points[len(d):]:
        xi = lookup[p.parents[0]]
        xn = lookup[p.parents[1]]
        x = np.array(p.x)
        span = xn - xi
        # recover delta from the widest coordinate, then check the rest
        j = int(np.argmax(np.abs(span)))
        assert span[j] != 0
        delta = (x[j] - xi[j]) / span[j]
        assert -1e-9 <= delta <= 1 + 1e-9
        assert np.allclose(x, xi + delta * span, atol=1e-9)


def test_smote_neighbor_pool_respects_k():
    # a class of two: the only neighbor is the other point
    d = make_dataset({"a": 6, "b": 2})
    out = smote(d, k=5, seed=3)
    b_pids = [p.pid for p in d.points if p.label == "b"]
    for p in out.points[len(d):]:
        assert set(p.parents) == set(b_pids)


def test_smote_errors():
    d = make_dataset({"a": 5, "b": 1})
    with pytest.raises(ValueError) as err:
        smote(d, k=3, seed=0)
    assert "'b'" in str(err.value)
    with pytest.raises(ValueError):
        smote(make_dataset({"a": 3, "b": 2}), k=0, seed=0)
    with pytest.raises(ValueError):
        smote(LabeledDataset(()), k=1, seed=0)


def test_regimes_deterministic_and_distinct():
    d = make_dataset({"a": 12, "b": 5}, seed=2)
    for regime in ("over", "under", "smote"):
        first = apply_regime(d, regime, seed=7)
        again = apply_regime(d, regime, seed=7)
        assert [p.x for p in first.points] == [p.x for p in again.points]
        other = apply_regime(d, regime, seed=8)
        assert [p.x for p in first.points] != [p.x for p in other.points]
    assert apply_regime(d, "none", seed=7) is d
    with pytest.raises(ValueError):
        apply_regime(d, "bootstrap", seed=7)


def test_standardizer_hand_case():
    X = np.array([[0.0, 5.0], [2.0, 5.0], [4.0, 5.0]])
    s = Standardizer.fit(X)
    assert s.mean == (2.0, 5.0)
    assert s.scale[0] == pytest.approx(np.sqrt(8 / 3))
    assert s.scale[1] == 1.0  # constant feature: no division by zero
    out = s.transform(X)
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert out[:, 0].mean() == pytest.approx(0.0, abs=1e-15)


def test_standardizer_transform_dataset():
    d = make_dataset({"a": 3, "b": 2})
    s = Standardizer.fit(d.matrix())
    out = s.transform_dataset(d)
    assert [p.label for p in out.points] == [p.label for p in d.points]
    assert [p.pid for p in out.points] == [p.pid for p in d.points]
    assert np.allclose(out.matrix(), s.transform(d.matrix()))
    with pytest.raises(ValueError):
        Standardizer.fit(np.empty((0, 3)))


def test_smote_distances_use_standardized_space():
    """Neighbor ranking must happen after scaling: feature 0 spans tens
    of thousands here, so in raw space it drowns feature 1 and b1 is the
    nearest neighbor of b0; standardized, b2 wins by orders of
    magnitude."""
    points = (
        DataPoint((0.0, 0.0), "b", "b0"),
        DataPoint((100.0, 10.0), "b", "b1"),    # raw-nearest to b0
        DataPoint((300.0, 0.1), "b", "b2"),     # standardized-nearest
        DataPoint((0.0, 0.0), "a", "a0"),
        DataPoint((10000.0, 1.0), "a", "a1"),
        DataPoint((20000.0, 2.0), "a", "a2"),
        DataPoint((30000.0, 3.0), "a", "a3"),
    )
    d = LabeledDataset(points)
    out = smote(d, k=1, seed=0)
    synth = [p for p in out.points if p.synthetic]
    assert len(synth) == 1
    assert synth[0].parents == ("b0", "b2")

"""Acceptance gate: one test per release criterion.

Run with `pytest tests/test_acceptance.py -v` to get a pass/fail line per
criterion.  The protocol-mirror corpus (4 classes x 60 graphs, n in
[200, 1000]) is built once per session and shared; on a single core the
whole file takes roughly twenty minutes, dominated by null-ensemble
featurization.
"""
from __future__ import annotations

import hashlib
import math
import os
import time

import numpy as np
import pytest

import oracles
from netfp import cli
from netfp import pipeline as pl
from netfp import rng as rng_mod
from netfp.features import assortativity, census, clustering, featurize
from netfp.graph import Graph, degree_array, parse_gml, simplify, write_gml
from netfp.learner import ForestConfig, auc, gini, train_forest
from netfp.nullmodels import EnsembleSpec, ensemble
from netfp.sampling import DataPoint, LabeledDataset

CORPUS_SEED = 20260816
RUNS = 100
CFG = ForestConfig(trees=100)

# the stated budget assumes eight cores; scale it to what this box has
BUDGET_SCALE = 8.0 / min(8, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Synthetic study corpus plus its feature table; returns
    (dataset, build_seconds)."""
    base = str(tmp_path_factory.mktemp("acceptance_corpus"))
    t0 = time.perf_counter()
    entries = []
    for model, params in cli.DEFAULT_CORPUS:
        template = dict(params)
        template["n"] = (200, 1000)
        entries.extend(cli._gen_graphs(model, model, template, 60,
                                       CORPUS_SEED))
    cli._write_corpus(base, entries, {"seed": CORPUS_SEED})
    features = os.path.join(base, "features.csv")
    cli._run_featurize(base, os.path.join(base, "manifest.json"), features,
                       ensemble_size=100, swaps_per_edge=10,
                       seed=CORPUS_SEED, sp_norm="euclidean",
                       counting="induced", drop_isolated=False, threads=1)
    data = pl.load_features_csv(features)
    return data, time.perf_counter() - t0


# --- criterion: census equals brute force on 500 fuzzed graphs ----------------

def test_census_oracle_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    for _ in range(500):
        g = oracles.random_simple_graph(rng, max_n=30)
        got = census(g)
        want = oracles.census_by_quadruples(g)
        assert got.counts == want, f"census mismatch on {g.sorted_edges()}"
    assert time.perf_counter() - t0 < 60.0


# --- criterion: assortativity matches a Pearson oracle ------------------------

def test_assortativity_oracle_equivalence():
    rng = np.random.default_rng(211)
    defined = 0
    for _ in range(200):
        g = oracles.random_simple_graph(rng, max_n=30)
        got = assortativity(g)
        want = oracles.assortativity_by_pearson(g)
        if want is None:
            assert got is None
        else:
            defined += 1
            assert got == pytest.approx(want, abs=1e-9)
    assert defined > 100
    assert assortativity(oracles.star_graph(7)) == pytest.approx(-1.0,
                                                                 abs=1e-12)
    assert assortativity(oracles.path_graph(4)) == pytest.approx(-0.5,
                                                                 abs=1e-12)
    for regular in (oracles.cycle_graph(7), oracles.complete_graph(5)):
        assert assortativity(regular) is None


# --- criterion: rewiring preserves degrees and simplicity ----------------------

def test_null_model_exactness():
    rng = np.random.default_rng(307)
    spec_template = EnsembleSpec(size=20, swaps_per_edge=10, seed=0)
    for trial in range(100):
        g = oracles.random_simple_graph(rng, max_n=25, min_n=2)
        spec = EnsembleSpec(size=spec_template.size,
                            swaps_per_edge=spec_template.swaps_per_edge,
                            seed=trial)
        degrees = sorted(oracles.degree_list(g))
        for member in ensemble(g, spec):
            assert sorted(oracles.degree_list(member)) == degrees
            assert member.node_count == g.node_count
            for u, v in member.edges:   # simple by construction: u < v,
                assert 0 <= u < v < member.node_count  # no loops, set-unique


# --- criterion: profile norm and relabeling invariance --------------------------

def test_sp_normalization_and_invariance(corpus):
    data, _ = corpus
    norms = np.linalg.norm(np.array([p.x[2:] for p in data.points]), axis=1)
    assert np.all((np.abs(norms - 1.0) < 1e-12) | (norms < 1e-12))
    # relabeling leaves every deterministic ingredient exactly alone
    rng = np.random.default_rng(419)
    for trial in range(10):
        g = oracles.random_simple_graph(rng, max_n=24, min_n=4)
        base_census = census(g).counts
        base_clust = clustering(g)
        base_assort = assortativity(g)
        for _ in range(20):
            perm = list(rng.permutation(g.node_count))
            h = oracles.relabel(g, perm)
            assert census(h).counts == base_census
            assert clustering(h) == base_clust
            assert assortativity(h) == base_assort
    # and the norm property holds for relabeled inputs end to end
    espec = EnsembleSpec(size=12, swaps_per_edge=10, seed=5)
    g = oracles.random_simple_graph(np.random.default_rng(23), max_n=20,
                                    min_n=12, p=0.3)
    for k in range(3):
        perm = list(np.random.default_rng(k).permutation(g.node_count))
        vec, _ = featurize(oracles.relabel(g, perm), espec)
        norm = math.sqrt(sum(v * v for v in vec.sp))
        assert abs(norm - 1.0) < 1e-12 or norm < 1e-12


# --- criterion: learner sanity ---------------------------------------------------

def test_learner_sanity():
    assert gini((0.5, 0.5)) == 0.5
    assert gini((1.0,)) == 0.0
    assert gini((1.0, 0.0)) == 0.0
    # separable blobs, held out, 100 trees
    def blobs(count, seed_shift):
        pts = []
        r = np.random.default_rng(77 + seed_shift)
        for c, center in enumerate(((0.0, 0.0), (4.0, 4.0))):
            for i in range(count):
                x = np.array(center) + r.standard_normal(2)
                pts.append(DataPoint((float(x[0]), float(x[1])),
                                     f"c{c}", f"c{c}#{seed_shift}#{i}"))
        return LabeledDataset(tuple(pts))
    model = train_forest(blobs(150, 0), ForestConfig(trees=100), seed=9)
    test = blobs(100, 1)
    pred = model.predict(test.matrix())
    acc = float(np.mean([a == p.label for a, p in zip(pred, test.points)]))
    assert acc >= 0.95
    assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5
    assert auc([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.75


# --- criterion: protocol mirror on the synthetic corpus ---------------------------

def test_protocol_mirror(corpus):
    data, build_seconds = corpus
    t0 = time.perf_counter()
    floors = {"er": 0.85, "ws": 0.85, "ba": 0.85, "ff": 0.6}
    for regime in ("none", "over", "under", "smote"):
        agg = pl.run_multiclass_confusion(data, regime, RUNS, CFG,
                                          CORPUS_SEED)
        assert agg.labels == ("ba", "er", "ff", "ws")
        for i, lab in enumerate(agg.labels):
            diag = agg.row_normalized[i, i]
            assert diag >= floors[lab], (
                f"{regime}: {lab} diagonal {diag:.3f} < {floors[lab]}")
    aucs = [pl.run_binary_importance(data, target, RUNS, CFG,
                                     CORPUS_SEED).mean_auc
            for target in data.labels()]
    assert float(np.mean(aucs)) >= 0.9
    elapsed = build_seconds + (time.perf_counter() - t0)
    assert elapsed < 1800.0 * BUDGET_SCALE


# --- criterion: sampling helps the starved class ----------------------------------

def test_imbalance_behavior(corpus):
    """Starve ff to 10 instances; resampling should buy back >= 0.1 of its
    confusion diagonal versus no resampling, averaged over 3 master seeds.

    Known red: on this synthetic corpus ff is nearly perfectly separable
    (its clustering and sp1 sit ~2 standardized units from every other
    class), so even 7 real training instances classify almost cleanly and
    smote has under 0.05 of headroom.  The gap direction holds where any
    headroom exists; the 0.1 magnitude does not.  The floor is asserted
    anyway: it is the stated release bar, and weakening it would hide the
    result rather than report it.
    """
    data, _ = corpus
    ff = [p for p in data.points if p.label == "ff"]
    rest = tuple(p for p in data.points if p.label != "ff")
    gaps = []
    detail = []
    for master_seed in (1, 2, 3):
        rng = rng_mod.derive(master_seed, "downsample")
        keep = set(int(i) for i in rng.choice(len(ff), size=10,
                                              replace=False))
        small = LabeledDataset(rest + tuple(
            p for i, p in enumerate(ff) if i in keep))
        diag = {}
        for regime in ("none", "smote"):
            agg = pl.run_multiclass_confusion(small, regime, RUNS, CFG,
                                              master_seed)
            i = agg.labels.index("ff")
            diag[regime] = agg.row_normalized[i, i]
        gaps.append(diag["smote"] - diag["none"])
        detail.append(f"seed {master_seed}: none={diag['none']:.3f} "
                      f"smote={diag['smote']:.3f}")
    assert float(np.mean(gaps)) >= 0.1, (
        f"mean smote-vs-none ff-diagonal gap {float(np.mean(gaps)):.3f} "
        f"< 0.1 ({'; '.join(detail)})")


# --- criterion: similarity network -> communities -> overlap ------------------------

def test_similarity_community_machinery():
    w, labels = oracles.barbell_graph(5)   # Bell(10) = 115975 partitions
    agg = pl.ConfusionAggregate(labels, 1, w.astype(np.int64), w, w, w,
                                (), ())
    net = pl.build_similarity_network(agg)
    part = pl.detect_communities(net)
    groups = {frozenset(g) for g in part.groups()}
    assert groups == {frozenset(labels[:5]), frozenset(labels[5:])}
    best_rgs, best_q = oracles.best_partition_by_enumeration(w)
    want = {frozenset(labels[i] for i in grp)
            for grp in oracles.groups_of(best_rgs)}
    assert groups == want
    assert part.modularity == pytest.approx(best_q, abs=1e-12)
    # overlap over the four per-regime partitions of a fake consensus
    parts = [part] * 4
    ov = pl.community_overlap(parts)
    assert np.array_equal(ov.counts, ov.counts.T)
    assert np.all(np.diag(ov.counts) == len(parts))


# --- criterion: byte-level determinism of the full chain ----------------------------

def digest_tree(path: str) -> dict[str, str]:
    out = {}
    for root, _, files in os.walk(path):
        for f in files:
            p = os.path.join(root, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, path)] = hashlib.sha256(
                    fh.read()).hexdigest()
    return out


def test_determinism(tmp_path):
    out = str(tmp_path / "study")   # one target: rerunning the same
    digests = []                    # command must reproduce every byte
    for threads in ("1", "1", "8", "8"):
        code = cli.main(["all", "--out", out, "--seed", "99",
                         "--count-per-class", "8", "--n-range", "40:80",
                         "--runs", "6", "--trees", "20",
                         "--ensemble-size", "6", "--swaps-per-edge", "4",
                         "--threads", threads])
        assert code == 0
        digests.append(digest_tree(out))
    assert digests[0] == digests[1]   # same thread count, rerun
    assert digests[2] == digests[3]
    assert digests[0] == digests[2]   # worker count changes nothing


# --- criterion: GML round trip -------------------------------------------------------

def test_gml_round_trip():
    rng = np.random.default_rng(523)
    for trial in range(1000):
        g = oracles.random_simple_graph(rng, max_n=24)
        if trial % 3 == 0 and g.node_count:
            labels = {int(i): f"v{int(i)}"
                      for i in rng.choice(g.node_count,
                                          size=min(3, g.node_count),
                                          replace=False)}
            g = Graph(g.node_count, g.edges, labels)
        record = parse_gml(write_gml(g))
        back = simplify(record)
        assert record.self_loop_count == 0
        assert record.multi_edge_count == 0
        assert back.node_count == g.node_count
        assert back.edges == g.edges
        assert back.node_labels == g.node_labels
        assert np.array_equal(degree_array(back), degree_array(g))
        assert write_gml(back) == write_gml(g)

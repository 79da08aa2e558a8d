"""Degree-preserving randomization via double edge swaps.

The null ensemble for the significance profile: each member is the input
graph churned through many attempted swaps, which preserves the degree
sequence exactly while destroying higher-order structure.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .graph import Graph


@dataclass(frozen=True)
class EnsembleSpec:
    """How to build a null ensemble: member count, churn, stream seed.

    ``swaps_per_edge`` scales the number of attempted swaps per member to
    the graph's size (attempts = swaps_per_edge * edge_count).
    """

    size: int = 100
    swaps_per_edge: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError(f"ensemble size must be >= 2, got {self.size}")
        if self.swaps_per_edge < 0:
            raise ValueError(
                f"swaps_per_edge must be >= 0, got {self.swaps_per_edge}")


def rewire(g: Graph, swaps: int, rng: np.random.Generator) -> Graph:
    """Attempt `swaps` double edge swaps; reject any that break simplicity.

    A swap picks two distinct edges {a,b}, {c,d} and proposes either
    {a,d},{c,b} or {a,c},{b,d} on a coin flip.  Proposals creating a
    self-loop or an edge that already exists are rejected (the attempt is
    still consumed).  Degrees are untouched either way.
    """
    m = g.edge_count
    if m < 2 or swaps <= 0:
        return g
    edges = g.sorted_edges()
    eset = set(edges)
    draws = rng.integers(0, m, size=2 * swaps)
    sides = rng.integers(0, 2, size=swaps)
    first = draws[0::2].tolist()
    second = draws[1::2].tolist()
    flips = sides.tolist()
    for t in range(swaps):
        i = first[t]
        j = second[t]
        if i == j:
            continue
        a, b = edges[i]
        c, d = edges[j]
        if flips[t]:
            x, y, u, v = a, d, c, b
        else:
            x, y, u, v = a, c, b, d
        if x == y or u == v:
            continue
        e1 = (x, y) if x < y else (y, x)
        e2 = (u, v) if u < v else (v, u)
        if e1 == e2 or e1 in eset or e2 in eset:
            continue
        eset.remove((a, b))
        eset.remove((c, d))
        eset.add(e1)
        eset.add(e2)
        edges[i] = e1
        edges[j] = e2
    return Graph(g.node_count, frozenset(eset), g.node_labels)


def ensemble(g: Graph, spec: EnsembleSpec) -> list[Graph]:
    """Independent rewired copies; member k's stream is keyed (seed, k)."""
    attempts = spec.swaps_per_edge * g.edge_count
    return [rewire(g, attempts, rng_mod.derive(spec.seed, k))
            for k in range(spec.size)]

"""Synthetic graph families with known structural signatures.

Four growth/wiring models: Erdos-Renyi uniform random graphs, the
Watts-Strogatz rewired ring lattice, Barabasi-Albert preferential
attachment, and the forest-fire copying model.  Each generator consumes
its own derived random stream, so a spec reproduces the same graph on
any machine and at any thread count.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import rng as rng_mod
from .graph import Graph


@dataclass(frozen=True)
class GraphSpec:
    model: str
    params: Mapping[str, float]
    seed: int


_MODELS = ("er", "ws", "ba", "ff")


def generate(spec: GraphSpec) -> Graph:
    """Dispatch on spec.model; the stream is keyed by (seed, model)."""
    if spec.model not in _MODELS:
        raise ValueError(f"unknown model {spec.model!r}; expected one of {_MODELS}")
    rng = rng_mod.derive(spec.seed, spec.model)
    p = dict(spec.params)
    if spec.model == "er":
        return _er(_as_int(p, "n"), _as_float(p, "p"), rng)
    if spec.model == "ws":
        return _ws(_as_int(p, "n"), _as_int(p, "k"), _as_float(p, "p"), rng)
    if spec.model == "ba":
        n = _as_int(p, "n")
        m = _as_int(p, "m")
        m0 = _as_int(p, "m0") if "m0" in p else m
        return _ba(n, m, m0, rng)
    n = _as_int(p, "n")
    ambassadors = _as_int(p, "ambassadors") if "ambassadors" in p else 1
    return _ff(n, _as_float(p, "p_f"), _as_float(p, "p_b"), ambassadors, rng)


def er(n: int, p: float, seed: int) -> Graph:
    return generate(GraphSpec("er", {"n": n, "p": p}, seed))


def ws(n: int, k: int, p: float, seed: int) -> Graph:
    return generate(GraphSpec("ws", {"n": n, "k": k, "p": p}, seed))


def ba(n: int, m: int, seed: int, m0: int | None = None) -> Graph:
    return generate(GraphSpec("ba", {"n": n, "m": m, "m0": m if m0 is None else m0}, seed))


def ff(n: int, p_f: float, p_b: float, seed: int, ambassadors: int = 1) -> Graph:
    return generate(GraphSpec(
        "ff", {"n": n, "p_f": p_f, "p_b": p_b, "ambassadors": ambassadors}, seed))


def _as_int(params: dict, key: str) -> int:
    if key not in params:
        raise ValueError(f"missing parameter {key!r}")
    value = params[key]
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"parameter {key!r} must be an integer, got {value}")
    return int(value)


def _as_float(params: dict, key: str) -> float:
    if key not in params:
        raise ValueError(f"missing parameter {key!r}")
    return float(params[key])


# --- Erdos-Renyi ----------------------------------------------------------

def _er(n: int, p: float, rng: np.random.Generator) -> Graph:
    if n < 0:
        raise ValueError(f"er: n must be >= 0, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"er: p must be in [0, 1], got {p}")
    if n < 2 or p == 0.0:
        return Graph(n, frozenset())
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    pairs = zip(iu[keep].tolist(), ju[keep].tolist())
    return Graph(n, frozenset(pairs))


# --- Watts-Strogatz -------------------------------------------------------

def _ws(n: int, k: int, p: float, rng: np.random.Generator) -> Graph:
    if n < 0:
        raise ValueError(f"ws: n must be >= 0, got {n}")
    if k < 0 or k % 2 != 0:
        raise ValueError(f"ws: k must be even and >= 0, got {k}")
    if n > 0 and k >= n:
        raise ValueError(f"ws: k must be < n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"ws: p must be in [0, 1], got {p}")
    edges: set[tuple[int, int]] = set()
    nbrs: list[set[int]] = [set() for _ in range(n)]

    def _add(a: int, b: int) -> None:
        edges.add((a, b) if a < b else (b, a))
        nbrs[a].add(b)
        nbrs[b].add(a)

    def _drop(a: int, b: int) -> None:
        edges.discard((a, b) if a < b else (b, a))
        nbrs[a].discard(b)
        nbrs[b].discard(a)

    for d in range(1, k // 2 + 1):
        for i in range(n):
            _add(i, (i + d) % n)
    # Lane-by-lane rewiring: each lattice edge keeps its near endpoint i
    # and moves the far endpoint to a uniform non-self, non-duplicate
    # target.  Edges with no legal target are left in place, so the edge
    # count stays at n*k/2 exactly.
    for d in range(1, k // 2 + 1):
        for i in range(n):
            if rng.random() >= p:
                continue
            if len(nbrs[i]) >= n - 1:
                continue
            old = (i + d) % n
            while True:
                t = int(rng.integers(0, n))
                if t != i and t not in nbrs[i]:
                    break
            _drop(i, old)
            _add(i, t)
    return Graph(n, frozenset(edges))


# --- Barabasi-Albert ------------------------------------------------------

def _ba(n: int, m: int, m0: int, rng: np.random.Generator) -> Graph:
    if n < 0:
        raise ValueError(f"ba: n must be >= 0, got {n}")
    if m < 1:
        raise ValueError(f"ba: m must be >= 1, got {m}")
    if m0 < m:
        raise ValueError(f"ba: m0 must be >= m, got m0={m0}, m={m}")
    if n > 0 and m0 > n:
        raise ValueError(f"ba: m0 must be <= n, got m0={m0}, n={n}")
    if n == 0:
        return Graph(0, frozenset())
    edges: set[tuple[int, int]] = set()
    # Degree-proportional choice via a repeated-endpoint list: each edge
    # contributes both endpoints, so drawing uniformly from the list is
    # exactly proportional to degree.
    endpoints: list[int] = []
    for i in range(m0 - 1):  # seed: path on the first m0 nodes
        edges.add((i, i + 1))
        endpoints.extend((i, i + 1))
    for v in range(m0, n):
        chosen: set[int] = set()
        want = min(m, v)
        while len(chosen) < want:
            if endpoints:
                t = endpoints[int(rng.integers(0, len(endpoints)))]
            else:  # no edges yet (m0 == 1): fall back to a uniform pick
                t = int(rng.integers(0, v))
            if t not in chosen:
                chosen.add(t)
        for t in sorted(chosen):
            edges.add((t, v))
            endpoints.extend((t, v))
    return Graph(n, frozenset(edges))


# --- Forest fire ----------------------------------------------------------

def _ff(n: int, p_f: float, p_b: float, ambassadors: int,
        rng: np.random.Generator) -> Graph:
    if n < 0:
        raise ValueError(f"ff: n must be >= 0, got {n}")
    if not 0.0 <= p_f < 1.0:
        raise ValueError(f"ff: p_f must be in [0, 1), got {p_f}")
    if not 0.0 <= p_b <= 1.0:
        raise ValueError(f"ff: p_b must be in [0, 1], got {p_b}")
    if ambassadors < 1:
        raise ValueError(f"ff: ambassadors must be >= 1, got {ambassadors}")
    # Directed bookkeeping drives the burn; the emitted graph is the
    # undirected projection.  Forward spread follows out-links with a
    # geometric count of mean p_f/(1-p_f); backward spread follows
    # in-links with parameter q = p_b*p_f.
    q = p_b * p_f
    out_nbrs: list[set[int]] = [set() for _ in range(n)]
    in_nbrs: list[set[int]] = [set() for _ in range(n)]
    edges: set[tuple[int, int]] = set()
    for v in range(1, n):
        amb = min(ambassadors, v)
        start = rng.choice(v, size=amb, replace=False).tolist()
        visited = set(start)
        burned: list[int] = list(start)
        queue = deque(start)
        while queue:
            w = queue.popleft()
            x = int(rng.geometric(1.0 - p_f)) - 1
            y = int(rng.geometric(1.0 - q)) - 1
            for pool, count in ((out_nbrs[w], x), (in_nbrs[w], y)):
                if count <= 0:
                    continue
                candidates = sorted(pool - visited)
                if not candidates:
                    continue
                take = min(count, len(candidates))
                picked = rng.choice(len(candidates), size=take, replace=False)
                for idx in picked.tolist():
                    t = candidates[idx]
                    visited.add(t)
                    burned.append(t)
                    queue.append(t)
        for t in burned:
            out_nbrs[v].add(t)
            in_nbrs[t].add(v)
            edges.add((t, v))  # t < v always: t predates v
    return Graph(n, frozenset(edges))

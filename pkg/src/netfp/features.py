"""Scale-invariant structural features.

Three ingredients per graph: the clustering coefficient, degree
assortativity, and a six-component significance profile over the
connected four-node subgraphs (clique, diamond, paw, cycle, star, path),
z-scored against a degree-preserving null ensemble and normalized.

The census never enumerates quadruples.  It counts a handful of cheap
aggregate quantities (per-edge triangle counts, codegrees, clique pairs)
and recovers the six induced counts by inclusion-exclusion, which keeps a
100-member ensemble of mid-size graphs affordable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, degree_array
from .nullmodels import EnsembleSpec, ensemble

MOTIF_NAMES = ("m4_1", "m4_2", "m4_3", "m4_4", "m4_5", "m4_6")
# m4_1 clique (6 edges), m4_2 diamond (5), m4_3 paw (4, triangle),
# m4_4 cycle (4), m4_5 star (3), m4_6 path (3)

SIGMA_ZERO_CLAMP = 1e6
_DENSE_TABLE_LIMIT = 1 << 21  # codegree table entries before switching to unique()


@dataclass(frozen=True)
class MotifCensus:
    counts: tuple[int, int, int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.counts) != 6:
            raise ValueError("a census has exactly six counts")
        if any(c < 0 for c in self.counts):
            raise ValueError("census counts cannot be negative")

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class ZScoreReport:
    """Raw material behind a significance profile, kept for audits."""

    original: tuple[int, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    z: tuple[float, ...]
    ensemble_size: int


@dataclass(frozen=True)
class FeatureVector:
    clustering: float
    assortativity: float | None
    sp: tuple[float, float, float, float, float, float]

    def as_row(self) -> list[float]:
        """8 reals; the undefined-assortativity marker imputed to 0."""
        a = 0.0 if self.assortativity is None else self.assortativity
        return [self.clustering, a, *self.sp]


FEATURE_NAMES = ("clustering", "assortativity",
                 "sp1", "sp2", "sp3", "sp4", "sp5", "sp6")


def _edge_arrays(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    if g.edge_count == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    e = np.array(g.sorted_edges(), dtype=np.int64)
    return e[:, 0], e[:, 1]


def _neighbor_table(n: int, eu: np.ndarray, ev: np.ndarray,
                    deg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat CSR-ish adjacency: neighbors of i sorted ascending."""
    ends = np.concatenate([eu, ev])
    other = np.concatenate([ev, eu])
    order = np.argsort(ends * np.int64(n) + other)
    flat = other[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=offsets[1:])
    return flat, offsets


_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu_pairs(k: int) -> tuple[np.ndarray, np.ndarray]:
    pair = _TRIU_CACHE.get(k)
    if pair is None:
        pair = np.triu_indices(k, k=1)
        _TRIU_CACHE[k] = pair
    return pair


def census(g: Graph, counting: str = "induced") -> MotifCensus:
    """Count the six connected 4-node patterns.

    ``counting="induced"`` (default) counts vertex sets whose induced
    edges form exactly the pattern; ``"subgraph"`` counts pattern
    embeddings regardless of extra edges.
    """
    if counting not in ("induced", "subgraph"):
        raise ValueError(f"counting must be 'induced' or 'subgraph', got {counting!r}")
    n = g.node_count
    m = g.edge_count
    if m == 0:
        return MotifCensus((0, 0, 0, 0, 0, 0))
    eu, ev = _edge_arrays(g)
    deg = degree_array(g)
    flat, offsets = _neighbor_table(n, eu, ev, deg)

    # Codegree table over all node pairs with >= 1 common neighbor, built
    # by enumerating each node's neighbor pairs once.
    parts = []
    for v in range(n):
        kv = int(deg[v])
        if kv < 2:
            continue
        nb = flat[offsets[v]:offsets[v + 1]]
        iu, ju = _triu_pairs(kv)
        parts.append(nb[iu] * np.int64(n) + nb[ju])
    if parts:
        keys = np.concatenate(parts)
    else:
        keys = np.empty(0, dtype=np.int64)
    ekeys = eu * np.int64(n) + ev
    if n * n <= _DENSE_TABLE_LIMIT:
        table = np.bincount(keys, minlength=n * n)
        tri_e = table[ekeys]
        cod = table[table >= 2]
    elif keys.size:
        uniq, counts_u = np.unique(keys, return_counts=True)
        pos = np.searchsorted(uniq, ekeys).clip(max=len(uniq) - 1)
        tri_e = np.where(uniq[pos] == ekeys, counts_u[pos], 0).astype(np.int64)
        cod = counts_u[counts_u >= 2]
    else:
        tri_e = np.zeros(m, dtype=np.int64)
        cod = np.empty(0, dtype=np.int64)

    tri_sum = int(tri_e.sum())
    assert tri_sum % 3 == 0
    triangles = tri_sum // 3

    # K4: for each edge, count adjacent pairs among its common neighbors
    # with node bitmasks; every 4-clique is seen 12 times (6 edges, each
    # pair ordered twice).
    ordered_clique_pairs = 0
    hot = np.nonzero(tri_e >= 2)[0]
    if hot.size:
        masks = [0] * n
        for u, v in g.edges:
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        hu = eu[hot].tolist()
        hv = ev[hot].tolist()
        for u, v in zip(hu, hv):
            common = masks[u] & masks[v]
            s = 0
            rest = common
            while rest:
                low = rest & -rest
                w = low.bit_length() - 1
                rest ^= low
                s += (masks[w] & common).bit_count()
            ordered_clique_pairs += s
    assert ordered_clique_pairs % 12 == 0
    clique = ordered_clique_pairs // 12

    tri_pairs = int((tri_e * (tri_e - 1) // 2).sum())       # diamond + 6*K4
    cod_pairs = int((cod * (cod - 1) // 2).sum())           # 2 * (4-cycles as subgraphs)
    assert cod_pairs % 2 == 0
    ni_cycle = cod_pairs // 2

    tri_at = np.zeros(n, dtype=np.int64)
    np.add.at(tri_at, eu, tri_e)
    np.add.at(tri_at, ev, tri_e)
    assert not (tri_at & 1).any()
    tri_at >>= 1                                            # triangles at each node
    ni_paw = int(((deg - 2) * tri_at).sum())

    ni_star = int((deg * (deg - 1) * (deg - 2) // 6).sum())
    ni_path = int(((deg[eu] - 1) * (deg[ev] - 1)).sum()) - tri_sum

    if counting == "subgraph":
        return MotifCensus((clique, tri_pairs, ni_paw, ni_cycle, ni_star, ni_path))

    diamond = tri_pairs - 6 * clique
    cycle = ni_cycle - diamond - 3 * clique
    paw = ni_paw - 4 * diamond - 12 * clique
    star = ni_star - paw - 2 * diamond - 4 * clique
    path = ni_path - 4 * cycle - 2 * paw - 6 * diamond - 12 * clique
    result = (clique, diamond, paw, cycle, star, path)
    assert all(c >= 0 for c in result)
    return MotifCensus(result)


def clustering(g: Graph) -> float:
    """Global clustering: closed length-2 paths over all length-2 paths."""
    deg = degree_array(g)
    wedges = int((deg * (deg - 1) // 2).sum())
    if wedges == 0:
        return 0.0
    masks = [0] * g.node_count
    for u, v in g.edges:
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    closed = 0
    for u, v in g.edges:
        closed += (masks[u] & masks[v]).bit_count()
    return closed / wedges


def assortativity(g: Graph) -> float | None:
    """Pearson correlation of degrees across edge ends (both orders).

    Exact integer arithmetic until the final division; regular graphs
    (zero degree variance over edge ends) return None.
    """
    m = g.edge_count
    if m == 0:
        return None
    eu, ev = _edge_arrays(g)
    deg = degree_array(g)
    stubs = 2 * m
    s2 = int((deg * deg).sum())
    s3 = int((deg * deg * deg).sum())
    cross = 2 * int((deg[eu] * deg[ev]).sum())
    num = stubs * cross - s2 * s2
    den = stubs * s3 - s2 * s2
    if den == 0:
        return None
    return num / den


def _normalize_profile(z: np.ndarray, norm: str) -> np.ndarray:
    if norm == "euclidean":
        scale = float(np.sqrt((z * z).sum()))
    elif norm == "squared-sum":
        scale = float((z * z).sum())
    else:
        raise ValueError(f"norm must be 'euclidean' or 'squared-sum', got {norm!r}")
    if scale == 0.0:
        return np.zeros_like(z)
    return z / scale


def significance_profile(g: Graph, espec: EnsembleSpec, *,
                         counting: str = "induced",
                         norm: str = "euclidean",
                         ) -> tuple[np.ndarray, ZScoreReport]:
    """z-score the census against the null ensemble, then normalize.

    A degenerate ensemble coordinate (zero spread) maps to z=0 when the
    original count equals the ensemble value, otherwise to a signed clamp
    so direction survives without an infinity.
    """
    original = np.array(census(g, counting).counts, dtype=np.int64)
    members = ensemble(g, espec)
    counts = np.array([census(h, counting).counts for h in members], dtype=np.float64)
    mean = counts.mean(axis=0)
    std = counts.std(axis=0, ddof=1)
    z = np.zeros(6, dtype=np.float64)
    for i in range(6):
        if std[i] > 0.0:
            z[i] = (original[i] - mean[i]) / std[i]
        elif original[i] != mean[i]:
            z[i] = SIGMA_ZERO_CLAMP if original[i] > mean[i] else -SIGMA_ZERO_CLAMP
    sp = _normalize_profile(z, norm)
    report = ZScoreReport(tuple(int(c) for c in original),
                          tuple(float(v) for v in mean),
                          tuple(float(v) for v in std),
                          tuple(float(v) for v in z),
                          espec.size)
    return sp, report


def featurize(g: Graph, espec: EnsembleSpec, *,
              counting: str = "induced",
              norm: str = "euclidean") -> tuple[FeatureVector, ZScoreReport]:
    sp, report = significance_profile(g, espec, counting=counting, norm=norm)
    vec = FeatureVector(clustering(g), assortativity(g),
                        tuple(float(v) for v in sp))
    return vec, report

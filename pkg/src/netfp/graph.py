"""Undirected simple-graph core: GML ingestion, normalization, canonical output.

Every network in the pipeline is an unweighted undirected simple graph.
Files arrive as GML with arbitrary extra attributes; ``parse_gml`` keeps
only what matters (node ids, edge endpoints, weights, the directed flag)
and ``simplify`` folds that record down to the canonical ``Graph`` used
everywhere else.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np


class GmlError(ValueError):
    """A GML document that cannot be parsed or fails referential checks."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph on nodes 0..node_count-1.

    Edges are stored as (u, v) pairs with u < v, so self-loops and
    parallel edges are unrepresentable by construction.  ``node_labels``
    optionally maps a node index back to the external identifier it had
    in the source file.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]
    node_labels: Mapping[int, str] | None = None

    def __post_init__(self) -> None:
        if self.node_count < 0:
            raise ValueError("node_count must be >= 0")
        n = self.node_count
        for u, v in self.edges:
            if not (0 <= u < v < n):
                raise ValueError(f"edge ({u}, {v}) violates 0 <= u < v < {n}")
        if self.node_labels:
            for i in self.node_labels:
                if not (0 <= i < n):
                    raise ValueError(f"label attached to unknown node {i}")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @staticmethod
    def from_edges(node_count: int, pairs: Iterable[tuple[int, int]],
                   node_labels: Mapping[int, str] | None = None) -> "Graph":
        """Build a Graph, normalizing pair order and dropping repeats."""
        edges = set()
        for a, b in pairs:
            u, v = int(a), int(b)  # numpy integers break bit tricks later
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            edges.add((u, v) if u < v else (v, u))
        return Graph(node_count, frozenset(edges), node_labels)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


@dataclass
class RawGraphRecord:
    """What a GML file actually said, before normalization.

    ``entries`` preserves declaration order and directions; the loop and
    multi-edge counters are filled in by ``simplify``.
    """

    directed: bool = False
    node_ids: list[int] = field(default_factory=list)
    entries: list[tuple[int, int, float]] = field(default_factory=list)
    node_labels: dict[int, str] = field(default_factory=dict)
    self_loop_count: int = 0
    multi_edge_count: int = 0


# --- GML tokenizer / parser ---------------------------------------------

def _tokens(text: str) -> Iterator[tuple[str, str, int]]:
    """Yield (kind, value, line); kinds: atom, string, open, close."""
    i, line, n = 0, 1, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
        elif c in " \t\r":
            i += 1
        elif c == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
        elif c == "[":
            yield ("open", "[", line)
            i += 1
        elif c == "]":
            yield ("close", "]", line)
            i += 1
        elif c == '"':
            start = line
            i += 1
            buf = []
            while i < n and text[i] != '"':
                if text[i] == "\n":
                    line += 1
                buf.append(text[i])
                i += 1
            if i >= n:
                raise GmlError(f"line {start}: unterminated string")
            i += 1
            yield ("string", "".join(buf), start)
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n[]"#':
                j += 1
            yield ("atom", text[i:j], line)
            i = j


_Item = tuple[str, object, int]  # key, value, line; value is int|float|str|list


def _parse_items(toks: list[tuple[str, str, int]], pos: int,
                 depth_line: int | None) -> tuple[list[_Item], int]:
    """Parse key/value pairs until the matching ']' or end of input."""
    items: list[_Item] = []
    while pos < len(toks):
        kind, value, line = toks[pos]
        if kind == "close":
            if depth_line is None:
                raise GmlError(f"line {line}: unmatched ']'")
            return items, pos + 1
        if kind != "atom":
            raise GmlError(f"line {line}: expected a key, got {value!r}")
        key = value
        pos += 1
        if pos >= len(toks):
            raise GmlError(f"line {line}: key {key!r} has no value")
        vkind, vval, vline = toks[pos]
        if vkind == "open":
            sub, pos = _parse_items(toks, pos + 1, vline)
            items.append((key, sub, line))
        elif vkind == "string":
            items.append((key, _unescape(vval), line))
            pos += 1
        elif vkind == "atom":
            items.append((key, _number_or_word(vval), line))
            pos += 1
        else:
            raise GmlError(f"line {vline}: key {key!r} has no value")
    if depth_line is not None:
        raise GmlError(f"line {depth_line}: '[' is never closed")
    return items, pos


def _number_or_word(word: str) -> object:
    try:
        return int(word)
    except ValueError:
        pass
    try:
        return float(word)
    except ValueError:
        return word  # opaque; fine for keys we ignore


def _unescape(s: str) -> str:
    return s.replace("&quot;", '"')


def _escape(s: str) -> str:
    return s.replace('"', "&quot;")


def _int_field(items: list[_Item], key: str, owner: str, line: int) -> int | None:
    for k, v, vline in items:
        if k == key:
            if isinstance(v, bool) or not isinstance(v, int):
                raise GmlError(f"line {vline}: {owner} {key} must be an integer")
            return v
    return None


def parse_gml(text: str) -> RawGraphRecord:
    """Parse one GML document into a RawGraphRecord.

    Unknown keys, nested blocks and comments are skipped.  Errors carry
    the offending line number; edges referencing undeclared node ids are
    rejected here rather than surfacing later as index bugs.
    """
    toks = list(_tokens(text))
    top, _ = _parse_items(toks, 0, None)
    graph_items: list[_Item] | None = None
    for key, value, line in top:
        if key == "graph":
            if not isinstance(value, list):
                raise GmlError(f"line {line}: 'graph' must open a [...] block")
            graph_items = value
            break
    if graph_items is None:
        raise GmlError("line 1: no graph [...] block found")

    rec = RawGraphRecord()
    declared: set[int] = set()
    edge_items: list[tuple[list[_Item], int]] = []
    for key, value, line in graph_items:
        if key == "directed":
            if not isinstance(value, int) or isinstance(value, bool):
                raise GmlError(f"line {line}: directed must be 0 or 1")
            rec.directed = bool(value)
        elif key == "node":
            if not isinstance(value, list):
                raise GmlError(f"line {line}: 'node' must open a [...] block")
            nid = _int_field(value, "id", "node", line)
            if nid is None:
                raise GmlError(f"line {line}: node without an id")
            if nid in declared:  # tolerate re-declaration, keep the first
                continue
            declared.add(nid)
            rec.node_ids.append(nid)
            for k, v, _vline in value:
                if k == "label":
                    rec.node_labels[nid] = str(v)
                    break
        elif key == "edge":
            if not isinstance(value, list):
                raise GmlError(f"line {line}: 'edge' must open a [...] block")
            edge_items.append((value, line))
        # anything else: ignored on purpose

    for value, line in edge_items:
        src = _int_field(value, "source", "edge", line)
        dst = _int_field(value, "target", "edge", line)
        if src is None or dst is None:
            raise GmlError(f"line {line}: edge needs both source and target")
        for endpoint in (src, dst):
            if endpoint not in declared:
                raise GmlError(
                    f"line {line}: edge references undeclared node id {endpoint}")
        weight = 1.0
        for k, v, vline in value:
            if k == "weight":
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise GmlError(f"line {vline}: edge weight must be numeric")
                weight = float(v)
                break
        rec.entries.append((src, dst, weight))
    return rec


def simplify(record: RawGraphRecord) -> Graph:
    """Collapse a raw record to the canonical simple graph.

    Directionality is discarded, any nonzero weight counts as presence,
    parallel entries merge, self-loops drop, and node ids compact to
    [0, n) in first-appearance order.  Removal counts are recorded on the
    record itself.
    """
    index = {nid: i for i, nid in enumerate(record.node_ids)}
    edges: set[tuple[int, int]] = set()
    loops = 0
    multi = 0
    for src, dst, weight in record.entries:
        if weight == 0:
            continue
        u, v = index[src], index[dst]
        if u == v:
            loops += 1
            continue
        if u > v:
            u, v = v, u
        if (u, v) in edges:
            multi += 1
            continue
        edges.add((u, v))
    record.self_loop_count = loops
    record.multi_edge_count = multi
    labels = {index[nid]: lab for nid, lab in record.node_labels.items()}
    return Graph(len(record.node_ids), frozenset(edges), labels or None)


def load_gml(text: str) -> Graph:
    return simplify(parse_gml(text))


def write_gml(g: Graph) -> str:
    """Canonical GML: nodes by ascending id, edges sorted by (min, max).

    The output is byte-deterministic, so equal graphs serialize to equal
    documents.
    """
    lines = ["graph ["]
    labels = g.node_labels or {}
    for i in range(g.node_count):
        lines.append("  node [")
        lines.append(f"    id {i}")
        if i in labels:
            lines.append(f'    label "{_escape(labels[i])}"')
        lines.append("  ]")
    for u, v in g.sorted_edges():
        lines.append("  edge [")
        lines.append(f"    source {u}")
        lines.append(f"    target {v}")
        lines.append("  ]")
    lines.append("]")
    return "\n".join(lines) + "\n"


def degree(g: Graph, node: int) -> int:
    if not (0 <= node < g.node_count):
        raise ValueError(f"node {node} out of range [0, {g.node_count})")
    return sum(1 for u, v in g.edges if u == node or v == node)


def degree_array(g: Graph) -> np.ndarray:
    """All degrees at once, as int64."""
    deg = np.zeros(g.node_count, dtype=np.int64)
    for u, v in g.edges:
        deg[u] += 1
        deg[v] += 1
    return deg


def drop_isolated_nodes(g: Graph) -> Graph:
    """Remove degree-0 nodes, compacting ids in ascending order."""
    deg = degree_array(g)
    keep = [i for i in range(g.node_count) if deg[i] > 0]
    index = {old: new for new, old in enumerate(keep)}
    labels = None
    if g.node_labels:
        labels = {index[i]: lab for i, lab in g.node_labels.items()
                  if i in index} or None
    edges = frozenset((index[u], index[v]) for u, v in g.edges)
    return Graph(len(keep), edges, labels)

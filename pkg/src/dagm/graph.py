"""Directed graph container, edge-list ingestion and community files.

Graphs are stored as two CSR structures (successors and predecessors) over a
dense node index ``0..N-1``. Original labels live in ``external_ids``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or community input."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    indices = dst[order].astype(np.int64)
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, indices


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable node-indexed directed graph without self-loops or multi-edges.

    ``out_indices[out_indptr[u]:out_indptr[u+1]]`` are the sorted successors of
    ``u``; the ``in_*`` pair holds predecessors the same way.
    """

    node_count: int
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    external_ids: list[str] | None = field(default=None)
    dropped: int = 0

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]] | np.ndarray,
        external_ids: Sequence[str] | None = None,
    ) -> "DirectedGraph":
        """Build from ordered pairs; self-loops and duplicates are dropped and counted."""
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError(f"edge endpoint out of range [0, {n})")
        total = len(arr)
        arr = arr[arr[:, 0] != arr[:, 1]]
        if len(arr):
            arr = np.unique(arr, axis=0)
        dropped = total - len(arr)
        src, dst = arr[:, 0], arr[:, 1]
        out_indptr, out_indices = _csr(n, src, dst)
        in_indptr, in_indices = _csr(n, dst, src)
        ids = list(external_ids) if external_ids is not None else None
        if ids is not None and len(ids) != n:
            raise ValueError("external_ids must have one label per node")
        return cls(n, out_indptr, out_indices, in_indptr, in_indices, ids, dropped)

    @property
    def edge_count(self) -> int:
        return int(self.out_indptr[-1])

    def successors(self, u: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[u] : self.out_indptr[u + 1]]

    def predecessors(self, v: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[v] : self.in_indptr[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def has_edge(self, u: int, v: int) -> bool:
        succ = self.successors(u)
        i = np.searchsorted(succ, v)
        return bool(i < len(succ) and succ[i] == v)

    def edge_array(self) -> np.ndarray:
        """All edges as an ``(E, 2)`` array, sorted by (src, dst)."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.out_degree())
        return np.column_stack([src, self.out_indices])

    def edges(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edge_array()}

    def label(self, u: int) -> str:
        return self.external_ids[u] if self.external_ids is not None else str(u)

    def index_of(self) -> dict[str, int]:
        labels = self.external_ids if self.external_ids is not None else [str(i) for i in range(self.node_count)]
        return {lab: i for i, lab in enumerate(labels)}

    def reversed(self) -> "DirectedGraph":
        """Same graph with every edge direction flipped (swaps the CSR pairs)."""
        return DirectedGraph(
            self.node_count,
            self.in_indptr,
            self.in_indices,
            self.out_indptr,
            self.out_indices,
            self.external_ids,
            self.dropped,
        )

    def undirected_neighbors(self, u: int) -> np.ndarray:
        return np.union1d(self.successors(u), self.predecessors(u))

    def check(self) -> None:
        """Exhaustive consistency check of the two adjacency structures."""
        assert self.out_indptr[-1] == self.in_indptr[-1]
        out_pairs = self.edge_array()
        assert np.all(out_pairs[:, 0] != out_pairs[:, 1]), "self-loop present"
        rev = self.reversed().edge_array()[:, ::-1]
        order = np.lexsort((rev[:, 1], rev[:, 0]))
        assert np.array_equal(out_pairs, rev[order]), "out/in adjacency mismatch"
        for u in range(self.node_count):
            s = self.successors(u)
            assert np.all(np.diff(s) > 0), "unsorted or duplicate successors"


def to_reciprocal_directed(
    n: int,
    undirected_edges: Iterable[tuple[int, int]],
    external_ids: Sequence[str] | None = None,
) -> DirectedGraph:
    """Turn each undirected edge ``{u, v}`` into the two arcs ``(u, v)`` and ``(v, u)``."""
    arr = np.asarray(list(undirected_edges), dtype=np.int64).reshape(-1, 2)
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("undirected edge set contains a self-loop")
    both = np.vstack([arr, arr[:, ::-1]])
    return DirectedGraph.from_edges(n, both, external_ids)


def _content_lines(stream: IO[str] | Iterable[str]):
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def load_edge_list(stream: IO[str] | Iterable[str], directed: bool = True) -> DirectedGraph:
    """Parse a whitespace separated ``src dst`` edge list.

    Labels are re-indexed densely in order of first appearance. Self-loops and
    duplicate edges are dropped; the drop count is logged and stored on the
    returned graph as ``dropped``.
    """
    index: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    loops = 0
    for lineno, line in _content_lines(stream):
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 2 node labels, got {len(tokens)}", lineno)
        a, b = (index.setdefault(t, len(index)) for t in tokens)
        if a == b:
            loops += 1
            continue
        pairs.append((a, b))
    if not pairs:
        raise GraphFormatError("edge list contains no edges")
    labels = list(index)
    n = len(labels)
    if directed:
        g = DirectedGraph.from_edges(n, pairs, labels)
        dropped = loops + g.dropped
    else:
        g = to_reciprocal_directed(n, pairs, labels)
        dropped = loops + g.dropped // 2
    g = DirectedGraph(g.node_count, g.out_indptr, g.out_indices, g.in_indptr, g.in_indices, labels, dropped)
    if dropped:
        logger.warning("dropped %d self-loop or duplicate edges", dropped)
    return g


def write_edge_list(g: DirectedGraph, stream: IO[str]) -> None:
    for u, v in g.edge_array():
        stream.write(f"{g.label(u)}\t{g.label(v)}\n")


@dataclass
class GroundTruthCommunities:
    """Reference communities as dense node-id sets.

    ``outgoing`` / ``incoming`` are optional directed halves; ``communities``
    always holds the full member set of each community.
    """

    communities: list[frozenset[int]]
    outgoing: list[frozenset[int]] | None = None
    incoming: list[frozenset[int]] | None = None

    def __post_init__(self):
        if any(len(c) == 0 for c in self.communities):
            raise ValueError("empty community")

    def __len__(self) -> int:
        return len(self.communities)


def read_label_sets(stream: IO[str] | Iterable[str]) -> list[frozenset[str]]:
    """One community of raw labels per line; duplicates collapse, singletons are rejected."""
    comms = []
    for lineno, line in _content_lines(stream):
        members = frozenset(line.split())
        if len(members) < 2:
            raise GraphFormatError("community must have at least 2 distinct members", lineno)
        comms.append(members)
    if not comms:
        raise GraphFormatError("no communities found")
    return comms


def load_communities(stream: IO[str] | Iterable[str], graph: DirectedGraph) -> GroundTruthCommunities:
    """Read one community per line, resolving labels through ``graph.external_ids``."""
    index = graph.index_of()
    comms: list[frozenset[int]] = []
    for lineno, line in _content_lines(stream):
        members = set()
        for tok in line.split():
            if tok not in index:
                raise GraphFormatError(f"unknown node label {tok!r}", lineno)
            members.add(index[tok])
        if len(members) < 2:
            raise GraphFormatError("community must have at least 2 distinct members", lineno)
        comms.append(frozenset(members))
    if not comms:
        raise GraphFormatError("no communities found")
    return GroundTruthCommunities(comms)


def write_communities(truth: GroundTruthCommunities, graph: DirectedGraph, stream: IO[str]) -> None:
    for c in truth.communities:
        stream.write(" ".join(graph.label(u) for u in sorted(c)) + "\n")

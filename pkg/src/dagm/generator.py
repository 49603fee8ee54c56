"""Synthetic graphs: sampling from binary affiliations, planted scenarios, forest fire."""

from __future__ import annotations

from typing import IO, Iterable, Sequence

import numpy as np

from dagm.graph import DirectedGraph, GraphFormatError, GroundTruthCommunities, to_reciprocal_directed
from dagm.model import DiscreteAffiliationGraph


def generate(
    b: DiscreteAffiliationGraph,
    n: int,
    include_background: bool = True,
    rng_seed: int | None = 0,
) -> tuple[DirectedGraph, GroundTruthCommunities]:
    """Sample a directed graph from binary affiliations.

    Each community ``c`` independently creates each edge of
    ``O(c) x I(c)`` (minus self-pairs) with probability ``p_c``, so a pair
    sharing the communities ``C_uv`` gets an edge with probability
    ``1 - prod(1 - p_c)``. With ``include_background`` the pairs that share no
    community get an edge with probability ``1/n``.
    """
    if b.max_node() >= n:
        raise ValueError(f"affiliation references node {b.max_node()} but n={n}")
    rng = np.random.default_rng(rng_seed)
    blocks = []
    covered = []
    for out, inc, p in zip(b.outgoing, b.incoming, b.probs):
        if not out or not inc:
            continue
        o = np.array(sorted(out), dtype=np.int64)
        i = np.array(sorted(inc), dtype=np.int64)
        hit = rng.random((len(o), len(i))) < p
        uu, vv = np.nonzero(hit)
        blocks.append(np.column_stack([o[uu], i[vv]]))
        covered.append((o, i))
    if include_background and n > 1:
        pairs = n * (n - 1)
        count = rng.binomial(pairs, 1.0 / n)
        idx = rng.choice(pairs, size=count, replace=False)
        u = idx // (n - 1)
        v = idx % (n - 1)
        v = v + (v >= u)
        shared = np.zeros(len(idx), dtype=bool)
        for o, i in covered:
            shared |= np.isin(u, o) & np.isin(v, i)
        blocks.append(np.column_stack([u[~shared], v[~shared]]))
    edges = np.vstack(blocks) if blocks else np.zeros((0, 2), dtype=np.int64)
    g = DirectedGraph.from_edges(n, edges)
    g = DirectedGraph(g.node_count, g.out_indptr, g.out_indices, g.in_indptr, g.in_indices, None, 0)
    truth = GroundTruthCommunities(
        [o | i for o, i in zip(b.outgoing, b.incoming)],
        list(b.outgoing),
        list(b.incoming),
    )
    return g, truth


def figure3_affiliations(
    sizes: int | Sequence[int] = 30,
    overlap: int = 10,
    p_in: float | Sequence[float] = 0.9,
) -> tuple[DiscreteAffiliationGraph, int]:
    """Two overlapping cohesive communities A, B plus two 2-mode communities.

    A's members send edges to receiver set C and B's members to receiver set D.
    Node layout: A then B (sharing ``overlap`` nodes), then C, then D.
    Community order in the result is A, B, A->C, B->D.
    """
    sa, sb, sc, sd = (sizes,) * 4 if isinstance(sizes, int) else tuple(sizes)
    if min(sa, sb, sc, sd) < 4:
        raise ValueError("every block needs at least 4 nodes")
    if not 0 <= overlap <= min(sa, sb):
        raise ValueError("overlap must fit inside both cohesive communities")
    probs = (p_in,) * 4 if np.isscalar(p_in) else tuple(p_in)
    a = range(0, sa)
    b = range(sa - overlap, sa - overlap + sb)
    start = sa - overlap + sb
    c = range(start, start + sc)
    d = range(start + sc, start + sc + sd)
    n = start + sc + sd
    aff = DiscreteAffiliationGraph(
        outgoing=[a, b, a, b],
        incoming=[a, b, c, d],
        probs=probs,
    )
    return aff, n


def planted_figure3(
    sizes: int | Sequence[int] = 30,
    overlap: int = 10,
    p_in: float | Sequence[float] = 0.9,
    rng_seed: int | None = 0,
    include_background: bool = False,
) -> tuple[DirectedGraph, GroundTruthCommunities]:
    aff, n = figure3_affiliations(sizes, overlap, p_in)
    return generate(aff, n, include_background, rng_seed)


def planted_cohesive(
    k: int = 4,
    size: int = 30,
    p_in: float = 0.9,
    rng_seed: int | None = 0,
    include_background: bool = False,
) -> tuple[DirectedGraph, GroundTruthCommunities]:
    """``k`` disjoint cohesive communities of ``size`` nodes each."""
    groups = [range(i * size, (i + 1) * size) for i in range(k)]
    aff = DiscreteAffiliationGraph(groups, groups, [p_in] * k)
    return generate(aff, k * size, include_background, rng_seed)


def planted_bipartite(
    left: int = 20,
    right: int = 20,
    p: float = 0.9,
    rng_seed: int | None = 0,
) -> tuple[DirectedGraph, GroundTruthCommunities]:
    """Undirected 2-mode community between two node groups, made reciprocal.

    Each undirected left-right edge is sampled once with probability ``p`` and
    then stored in both directions.
    """
    rng = np.random.default_rng(rng_seed)
    hit = rng.random((left, right)) < p
    uu, vv = np.nonzero(hit)
    und = np.column_stack([uu, vv + left])
    g = to_reciprocal_directed(left + right, und)
    lset = frozenset(range(left))
    rset = frozenset(range(left, left + right))
    truth = GroundTruthCommunities([lset | rset], [lset], [rset])
    return g, truth


def forest_fire(
    n: int,
    p_forward: float = 0.36,
    p_backward: float = 0.32,
    rng_seed: int | None = 0,
) -> DirectedGraph:
    """Grow a directed graph by forest-fire burning.

    Every new node links to a uniformly chosen ambassador, then burns a
    geometric number (mean ``p/(1-p)``) of the current node's unburned out-links
    and in-links, links to each burned node and recurses from it.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not (0 <= p_forward < 1 and 0 <= p_backward < 1):
        raise ValueError("burning probabilities must lie in [0, 1)")
    rng = np.random.default_rng(rng_seed)
    out_links: list[list[int]] = [[] for _ in range(n)]
    in_links: list[list[int]] = [[] for _ in range(n)]
    src: list[int] = []
    dst: list[int] = []
    for v in range(1, n):
        amb = int(rng.integers(v))
        burned = {amb}
        queue = [amb]
        head = 0
        while head < len(queue) and len(burned) < n:
            w = queue[head]
            head += 1
            x = rng.geometric(1 - p_forward) - 1
            y = rng.geometric(1 - p_backward) - 1
            for links, count in ((out_links[w], x), (in_links[w], y)):
                if count == 0:
                    continue
                fresh = [z for z in links if z not in burned]
                if not fresh:
                    continue
                if count < len(fresh):
                    fresh = [fresh[i] for i in rng.choice(len(fresh), size=count, replace=False)]
                for z in fresh:
                    if len(burned) >= n:
                        break
                    burned.add(z)
                    queue.append(z)
        for z in queue:
            src.append(v)
            dst.append(z)
            out_links[v].append(z)
            in_links[z].append(v)
    edges = np.column_stack([np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)])
    return DirectedGraph.from_edges(n, edges)


def load_affiliation_spec(stream: IO[str] | Iterable[str]) -> tuple[DiscreteAffiliationGraph, int]:
    """Read binary affiliations from text.

    The first content line is ``nodes <N>``; every further line describes one
    community as ``<p> | <sender ids> | <receiver ids>`` with integer node ids
    in ``[0, N)``. Lines starting with ``#`` are comments.
    """
    n = None
    outgoing, incoming, probs = [], [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            head = line.split()
            if len(head) != 2 or head[0] != "nodes" or not head[1].isdigit() or int(head[1]) < 1:
                raise GraphFormatError("expected 'nodes <N>' header", lineno)
            n = int(head[1])
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3:
            raise GraphFormatError("expected '<p> | <senders> | <receivers>'", lineno)
        try:
            p = float(parts[0])
            out = [int(t) for t in parts[1].split()]
            inc = [int(t) for t in parts[2].split()]
        except ValueError as exc:
            raise GraphFormatError(str(exc), lineno) from None
        if not 0 < p <= 1:
            raise GraphFormatError(f"probability {p} outside (0, 1]", lineno)
        if not out or not inc or min(out + inc) < 0 or max(out + inc) >= n:
            raise GraphFormatError(f"node ids must be nonempty and lie in [0, {n})", lineno)
        outgoing.append(out)
        incoming.append(inc)
        probs.append(p)
    if n is None or not probs:
        raise GraphFormatError("affiliation file needs a header and at least one community")
    return DiscreteAffiliationGraph(outgoing, incoming, probs), n

"""Seed memberships from locally minimal neighbourhoods.

Conductance is measured on the undirected projection of the graph (an edge
is present if either direction exists). A node's closed neighbourhood is a
seed when its conductance beats that of every neighbour's neighbourhood;
ties go to the smaller node index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from dagm.graph import DirectedGraph
from dagm.model import AffiliationMatrices


@dataclass(frozen=True)
class SeedSet:
    center: int
    members: frozenset[int]
    conductance: float


def undirected_projection(g: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """CSR ``(indptr, indices)`` of the symmetrised graph, sorted and deduplicated."""
    n = g.node_count
    src = np.repeat(np.arange(n), g.out_degree())
    a = sp.csr_matrix((np.ones(len(src)), (src, g.out_indices)), shape=(n, n))
    a = (a + a.T).tocsr()
    a.sum_duplicates()
    a.sort_indices()
    return a.indptr.astype(np.int64), a.indices.astype(np.int64)


def conductance(s, g: DirectedGraph) -> float:
    """``cut(S, V \\ S) / min(vol(S), vol(V \\ S))`` on the undirected projection."""
    members = np.unique(np.fromiter(s, dtype=np.int64))
    n = g.node_count
    if len(members) == 0 or len(members) == n:
        raise ValueError("conductance is undefined for the empty set or the whole vertex set")
    ptr, ind = undirected_projection(g)
    deg = np.diff(ptr)
    inside = np.zeros(n, dtype=bool)
    inside[members] = True
    vol_s = int(deg[members].sum())
    vol_c = int(deg.sum()) - vol_s
    denom = min(vol_s, vol_c)
    if denom == 0:
        raise ValueError("conductance is undefined for a set or complement with zero volume")
    cut = sum(int((~inside[ind[ptr[u] : ptr[u + 1]]]).sum()) for u in members)
    return cut / denom


@njit(cache=True)
def _neighbourhood_conductances(ptr, ind):
    n = ptr.shape[0] - 1
    deg = ptr[1:] - ptr[:-1]
    total = deg.sum()
    mark = np.full(n, -1, dtype=np.int64)
    phi = np.full(n, np.inf)
    for u in range(n):
        mark[u] = u
        size = 1
        for j in range(ptr[u], ptr[u + 1]):
            mark[ind[j]] = u
            size += 1
        if size == n:
            continue
        vol = deg[u]
        cut = 0
        for j in range(ptr[u], ptr[u + 1]):
            vol += deg[ind[j]]
        for w_j in range(ptr[u], ptr[u + 1] + 1):
            w = u if w_j == ptr[u + 1] else ind[w_j]
            for j in range(ptr[w], ptr[w + 1]):
                if mark[ind[j]] != u:
                    cut += 1
        denom = min(vol, total - vol)
        if denom > 0:
            phi[u] = cut / denom
    return phi


def neighbourhood_conductances(g: DirectedGraph) -> np.ndarray:
    """Conductance of every closed neighbourhood; ``inf`` where undefined or equal to V."""
    ptr, ind = undirected_projection(g)
    return _neighbourhood_conductances(ptr, ind)


def locally_minimal_neighborhoods(g: DirectedGraph) -> list[SeedSet]:
    ptr, ind = undirected_projection(g)
    phi = _neighbourhood_conductances(ptr, ind)
    seeds = []
    for u in range(g.node_count):
        if not np.isfinite(phi[u]):
            continue
        nbrs = ind[ptr[u] : ptr[u + 1]]
        pv = phi[nbrs]
        if np.all((phi[u] < pv) | ((phi[u] == pv) & (u < nbrs))):
            members = frozenset([u, *nbrs.tolist()])
            seeds.append(SeedSet(u, members, float(phi[u])))
    seeds.sort(key=lambda s: (s.conductance, s.center))
    return seeds


def _overlap(a: frozenset, b: frozenset) -> float:
    return len(a & b) / len(a | b)


def initialize_memberships(
    g: DirectedGraph,
    K: int,
    seeds: list[SeedSet],
    rng_seed: int = 0,
    max_overlap: float | None = 0.5,
) -> AffiliationMatrices:
    """0/1 memberships: community ``k`` takes the k-th best seed set.

    Inside seed ``S``, ``F[u, k] = 1`` if ``u`` has an edge to another member and
    ``H[u, k] = 1`` if it receives one from another member. Seeds whose Jaccard
    overlap with an already chosen seed exceeds ``max_overlap`` are skipped
    (``None`` keeps every seed). Missing seeds are replaced by closed
    neighbourhoods of random nodes, subject to the same overlap rule where
    possible.
    """
    n = g.node_count
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > n:
        raise ValueError(f"K={K} exceeds node count {n}")
    limit = 1.0 if max_overlap is None else max_overlap

    def novel(members: frozenset) -> bool:
        return max_overlap is None or all(_overlap(members, c) <= limit for c in chosen)

    chosen: list[frozenset[int]] = []
    used: set[int] = set()
    for s in sorted(seeds, key=lambda s: (s.conductance, s.center)):
        if len(chosen) == K:
            break
        if novel(s.members):
            chosen.append(s.members)
            used.add(s.center)
    if len(chosen) < K:
        rng = np.random.default_rng(rng_seed)
        order = rng.permutation(n)
        spare = []
        for u in order:
            if len(chosen) == K:
                break
            if u in used:
                continue
            members = frozenset([int(u), *g.undirected_neighbors(int(u)).tolist()])
            if novel(members):
                chosen.append(members)
            else:
                spare.append(members)
        chosen.extend(spare[: K - len(chosen)])
    m = AffiliationMatrices.zeros(n, K)
    for k, members in enumerate(chosen):
        inside = np.zeros(n, dtype=bool)
        inside[list(members)] = True
        for u in members:
            if inside[g.successors(u)].any():
                m.F[u, k] = 1.0
            if inside[g.predecessors(u)].any():
                m.H[u, k] = 1.0
    return m

"""Edge probabilities, likelihood and per-node objectives of the affiliation model.

Continuous model: node ``u`` sends an edge to ``v`` with probability
``1 - exp(-F_u . H_v)``. The log-likelihood over a directed graph is

    sum_{(u,v) in E} log(1 - exp(-F_u . H_v)) - sum_{(u,v) not in E, u != v} F_u . H_v

and the non-edge sum is evaluated from cached column sums of ``H``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Mapping

import numpy as np

from dagm import _kernels
from dagm.graph import DirectedGraph

EPS = 1e-10

Side = Literal["F", "H"]


@dataclass
class AffiliationMatrices:
    """Outgoing (``F``) and incoming (``H``) membership strengths, both ``N x K``."""

    F: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        self.F = np.ascontiguousarray(self.F, dtype=np.float64)
        self.H = np.ascontiguousarray(self.H, dtype=np.float64)
        if self.F.ndim != 2 or self.F.shape != self.H.shape:
            raise ValueError(f"F and H must share an N x K shape, got {self.F.shape} and {self.H.shape}")
        if (self.F < 0).any() or (self.H < 0).any():
            raise ValueError("membership strengths must be nonnegative")

    @property
    def K(self) -> int:
        return self.F.shape[1]

    @property
    def N(self) -> int:
        return self.F.shape[0]

    @classmethod
    def zeros(cls, n: int, k: int) -> "AffiliationMatrices":
        return cls(np.zeros((n, k)), np.zeros((n, k)))

    def copy(self) -> "AffiliationMatrices":
        return AffiliationMatrices(self.F.copy(), self.H.copy())


@dataclass
class ColumnSumCache:
    """Column sums of ``F`` and ``H``, used to evaluate non-edge sums in O(K)."""

    sum_F: np.ndarray
    sum_H: np.ndarray

    @classmethod
    def from_matrices(cls, m: AffiliationMatrices) -> "ColumnSumCache":
        sf = np.empty(m.K)
        sh = np.empty(m.K)
        _kernels.column_sums(m.F, sf)
        _kernels.column_sums(m.H, sh)
        return cls(sf, sh)

    def consistent_with(self, m: AffiliationMatrices, tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.sum_F, m.F.sum(axis=0), rtol=tol, atol=tol)
            and np.allclose(self.sum_H, m.H.sum(axis=0), rtol=tol, atol=tol)
        )


@dataclass(frozen=True)
class DiscreteAffiliationGraph:
    """Binary node-community affiliations with one edge probability per community.

    ``outgoing[c]`` are the senders of community ``c`` and ``incoming[c]`` its
    receivers; a cohesive community has both sets equal.
    """

    outgoing: tuple[frozenset[int], ...]
    incoming: tuple[frozenset[int], ...]
    probs: tuple[float, ...]

    def __init__(self, outgoing: Iterable[Iterable[int]], incoming: Iterable[Iterable[int]], probs: Iterable[float]):
        out = tuple(frozenset(int(u) for u in s) for s in outgoing)
        inc = tuple(frozenset(int(u) for u in s) for s in incoming)
        p = tuple(float(x) for x in probs)
        if not (len(out) == len(inc) == len(p)):
            raise ValueError("outgoing, incoming and probs must have one entry per community")
        for x in p:
            _check_prob(x)
        object.__setattr__(self, "outgoing", out)
        object.__setattr__(self, "incoming", inc)
        object.__setattr__(self, "probs", p)

    @property
    def K(self) -> int:
        return len(self.probs)

    def max_node(self) -> int:
        return max((max(s) for s in self.outgoing + self.incoming if s), default=-1)


def _check_prob(p: float) -> None:
    if not (0.0 < p <= 1.0):
        raise ValueError(f"community probability must lie in (0, 1], got {p}")


def discrete_edge_probability(uv_communities: Iterable[int], probs: Mapping[int, float] | np.ndarray, n: int) -> float:
    """``1 - prod(1 - p_c)`` over the shared communities, or ``1/n`` if there are none."""
    if n < 1:
        raise ValueError("node count must be positive")
    comms = list(uv_communities)
    if not comms:
        return 1.0 / n
    miss = 1.0
    for c in comms:
        p = float(probs[c])
        _check_prob(p)
        miss *= 1.0 - p
    return 1.0 - miss


def edge_probability(f_u: np.ndarray, h_v: np.ndarray) -> float:
    f_u = np.asarray(f_u, dtype=np.float64)
    h_v = np.asarray(h_v, dtype=np.float64)
    if f_u.shape != h_v.shape:
        raise ValueError(f"dimension mismatch: {f_u.shape} vs {h_v.shape}")
    return float(-np.expm1(-np.dot(f_u, h_v)))


def _empty_exclusions(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)


def _side_arrays(g: DirectedGraph, side: Side, excluded: DirectedGraph | None):
    """CSR arrays for the F-side (successors) or the H-side (predecessors)."""
    if side == "F":
        ptr, ind = g.out_indptr, g.out_indices
        xp, xi = (excluded.out_indptr, excluded.out_indices) if excluded is not None else _empty_exclusions(g.node_count)
    elif side == "H":
        ptr, ind = g.in_indptr, g.in_indices
        xp, xi = (excluded.in_indptr, excluded.in_indices) if excluded is not None else _empty_exclusions(g.node_count)
    else:
        raise ValueError(f"side must be 'F' or 'H', got {side!r}")
    return ptr, ind, xp, xi


def log_likelihood(
    g: DirectedGraph,
    m: AffiliationMatrices,
    eps: float = EPS,
    excluded: DirectedGraph | None = None,
    cache: ColumnSumCache | None = None,
) -> float:
    """Log-likelihood of ``g`` under ``m``; pairs in ``excluded`` enter neither sum."""
    if m.N != g.node_count:
        raise ValueError(f"matrices have {m.N} rows but graph has {g.node_count} nodes")
    cache = cache or ColumnSumCache.from_matrices(m)
    ptr, ind, xp, xi = _side_arrays(g, "F", excluded)
    per_node = np.empty(m.N)
    _kernels.row_objectives(m.F, m.H, ptr, ind, xp, xi, cache.sum_H, eps, 0, m.N, per_node)
    return float(per_node.sum())


def node_objective(
    u: int,
    f_u: np.ndarray,
    g: DirectedGraph,
    H: np.ndarray,
    side: Side = "F",
    eps: float = EPS,
    excluded: DirectedGraph | None = None,
    sum_other: np.ndarray | None = None,
) -> float:
    """Objective of one row with the other block frozen.

    For ``side="F"`` the row is ``F_u``, ``H`` is the incoming block and the
    neighbourhood is the out-neighbourhood of ``u``. For ``side="H"`` pass the
    ``H_u`` row and the ``F`` block; the neighbourhood is then the in-neighbourhood.
    """
    H = np.ascontiguousarray(H, dtype=np.float64)
    ptr, ind, xp, xi = _side_arrays(g, side, excluded)
    s = H.sum(axis=0) if sum_other is None else sum_other
    x = np.ascontiguousarray(f_u, dtype=np.float64)
    return float(_kernels.row_objective(x, u, H, ptr, ind, xp, xi, s, eps))


def node_gradient(
    u: int,
    f_u: np.ndarray,
    g: DirectedGraph,
    H: np.ndarray,
    cache: ColumnSumCache | None = None,
    side: Side = "F",
    eps: float = EPS,
    excluded: DirectedGraph | None = None,
) -> np.ndarray:
    """Gradient of :func:`node_objective` with respect to the row, in O(deg(u) K)."""
    H = np.ascontiguousarray(H, dtype=np.float64)
    ptr, ind, xp, xi = _side_arrays(g, side, excluded)
    if cache is None:
        s = H.sum(axis=0)
    else:
        s = cache.sum_H if side == "F" else cache.sum_F
        assert np.allclose(s, H.sum(axis=0), rtol=1e-9, atol=1e-9), "stale column-sum cache"
    out = np.empty(H.shape[1])
    _kernels.row_gradient(np.ascontiguousarray(f_u, dtype=np.float64), u, H, ptr, ind, xp, xi, s, eps, out)
    return out

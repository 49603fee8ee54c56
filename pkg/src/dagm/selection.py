"""Choosing the number of communities.

Graphs with at least ``small_network_edge_threshold`` edges use held-out
likelihood: a fraction of the edges plus a sample of non-edges is hidden
from training, and each candidate K is scored on those pairs. Smaller graphs
are fitted in full and scored with BIC.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from dagm.graph import DirectedGraph
from dagm.model import AffiliationMatrices
from dagm.optimizer import FitConfig, fit
from dagm.seeding import initialize_memberships, locally_minimal_neighborhoods

logger = logging.getLogger(__name__)


@dataclass
class KSelectionConfig:
    candidate_Ks: list[int] = field(default_factory=lambda: [2, 4, 8])
    holdout_fraction: float = 0.2
    small_network_edge_threshold: int = 100
    negative_sample_ratio: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.candidate_Ks:
            raise ValueError("at least one candidate K is required")
        if sorted(self.candidate_Ks) != list(self.candidate_Ks) or min(self.candidate_Ks) < 1:
            raise ValueError("candidate_Ks must be ascending positive integers")
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must lie in (0, 1)")
        if self.negative_sample_ratio < 0:
            raise ValueError("negative_sample_ratio must be nonnegative")


@dataclass
class KDiagnostic:
    K: int
    train_loglik: float
    test_loglik: float | None = None
    bic: float | None = None


@dataclass
class KSelection:
    K: int
    method: str
    diagnostics: list[KDiagnostic]

    def table(self) -> str:
        score = "test_loglik" if self.method == "holdout" else "bic"
        rows = [f"# K\ttrain_loglik\t{score}"]
        for d in self.diagnostics:
            value = d.test_loglik if self.method == "holdout" else d.bic
            rows.append(f"{d.K}\t{d.train_loglik:.6f}\t{value:.6f}")
        return "\n".join(rows)


def bic(loglik: float, n: int, k: int, edge_count: int) -> float:
    """``-2 loglik + n k ln|E|``."""
    if edge_count < 1:
        raise ValueError("BIC needs at least one edge")
    return -2.0 * loglik + n * k * math.log(edge_count)


@dataclass
class HoldoutSplit:
    train: DirectedGraph
    test_edges: np.ndarray
    test_non_edges: np.ndarray
    excluded: DirectedGraph


def split_pairs(g: DirectedGraph, cfg: KSelectionConfig) -> HoldoutSplit:
    """Hide a fraction of edges and a sample of non-edges from training."""
    rng = np.random.default_rng(cfg.rng_seed)
    n = g.node_count
    edges = g.edge_array()
    n_test = int(round(cfg.holdout_fraction * len(edges)))
    if n_test < 1 or n_test >= len(edges):
        raise ValueError("graph too small to hold out edges")
    pick = np.zeros(len(edges), dtype=bool)
    pick[rng.choice(len(edges), size=n_test, replace=False)] = True
    test_edges = edges[pick]

    available = n * (n - 1) - len(edges)
    wanted = min(int(round(cfg.negative_sample_ratio * n_test)), available)
    codes = set((edges[:, 0] * n + edges[:, 1]).tolist())
    chosen: list[int] = []
    seen: set[int] = set()
    while len(chosen) < wanted:
        batch = rng.integers(0, n, size=(2 * (wanted - len(chosen)) + 16, 2))
        for u, v in batch:
            code = int(u) * n + int(v)
            if u == v or code in codes or code in seen:
                continue
            seen.add(code)
            chosen.append(code)
            if len(chosen) == wanted:
                break
    non_edges = np.array([(c // n, c % n) for c in chosen], dtype=np.int64).reshape(-1, 2)
    train = DirectedGraph.from_edges(n, edges[~pick], g.external_ids)
    excluded = DirectedGraph.from_edges(n, np.vstack([test_edges, non_edges]))
    return HoldoutSplit(train, test_edges, non_edges, excluded)


def heldout_loglik(m: AffiliationMatrices, split: HoldoutSplit, eps: float = 1e-10) -> float:
    def probs(pairs: np.ndarray) -> np.ndarray:
        dots = np.einsum("ij,ij->i", m.F[pairs[:, 0]], m.H[pairs[:, 1]])
        return np.clip(-np.expm1(-dots), eps, 1 - eps)

    total = np.log(probs(split.test_edges)).sum()
    if len(split.test_non_edges):
        total += np.log1p(-probs(split.test_non_edges)).sum()
    return float(total)


def _fit_k(g: DirectedGraph, k: int, fit_cfg: FitConfig, excluded: DirectedGraph | None = None):
    seeds = locally_minimal_neighborhoods(g)
    m0 = initialize_memberships(g, k, seeds, fit_cfg.rng_seed)
    return fit(g, k, m0, fit_cfg, excluded=excluded)


def select_k(g: DirectedGraph, cfg: KSelectionConfig, fit_cfg: FitConfig | None = None) -> KSelection:
    fit_cfg = fit_cfg or FitConfig()
    candidates = [k for k in cfg.candidate_Ks if k <= g.node_count]
    if not candidates:
        raise ValueError("every candidate K exceeds the node count")
    E = g.edge_count
    split = None
    if E >= cfg.small_network_edge_threshold:
        try:
            split = split_pairs(g, cfg)
        except ValueError:
            logger.warning("cannot hold out edges from a %d-edge graph; using BIC", E)

    diagnostics = []
    if split is None:
        for k in candidates:
            _, report = _fit_k(g, k, fit_cfg)
            ll = report.final_loglik
            diagnostics.append(KDiagnostic(k, ll, bic=bic(ll, g.node_count, k, E)))
        best = min(diagnostics, key=lambda d: d.bic)
        return KSelection(best.K, "bic", diagnostics)

    for k in candidates:
        m, report = _fit_k(split.train, k, fit_cfg, split.excluded)
        diagnostics.append(KDiagnostic(k, report.final_loglik, test_loglik=heldout_loglik(m, split, fit_cfg.epsilon_floor)))
    best = max(diagnostics, key=lambda d: d.test_loglik)
    return KSelection(best.K, "holdout", diagnostics)

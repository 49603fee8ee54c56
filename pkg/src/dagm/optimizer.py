"""Block-coordinate ascent for the affiliation model.

A full pass is an F-phase (every ``F_u`` updated against a frozen ``H``)
followed by an H-phase. Inside a phase the row subproblems only read the
frozen block and its column sums, so they are split into contiguous chunks
and run on a thread pool; the result does not depend on the thread count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Literal

import numpy as np

from dagm import _kernels
from dagm.graph import DirectedGraph
from dagm.model import EPS, AffiliationMatrices, ColumnSumCache, Side, _side_arrays

logger = logging.getLogger(__name__)


class FitError(RuntimeError):
    pass


@dataclass
class FitConfig:
    max_outer_iterations: int = 500
    rel_improvement_stop: float = 1e-4
    line_search_shrink: float = 0.5
    line_search_accept: float = 0.05
    initial_step: float = 1.0
    max_line_search_steps: int = 10
    gradient_clip: float = 10.0
    epsilon_floor: float = EPS
    threads: int = 1
    rng_seed: int = 0
    schedule: Literal["phased", "interleaved"] = "phased"

    def __post_init__(self):
        if not 0 < self.line_search_shrink < 1:
            raise ValueError("line_search_shrink must lie in (0, 1)")
        if not 0 < self.line_search_accept < 0.5:
            raise ValueError("line_search_accept must lie in (0, 0.5)")
        if self.initial_step <= 0 or self.gradient_clip <= 0:
            raise ValueError("initial_step and gradient_clip must be positive")
        if self.max_outer_iterations < 1 or self.max_line_search_steps < 1 or self.threads < 1:
            raise ValueError("iteration bounds and thread count must be positive")
        if self.schedule not in ("phased", "interleaved"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "interleaved" and self.threads != 1:
            raise ValueError("the interleaved schedule is single-threaded")

    def _search_args(self):
        return (
            self.epsilon_floor,
            self.initial_step,
            self.line_search_shrink,
            self.line_search_accept,
            self.max_line_search_steps,
            self.gradient_clip,
        )


@dataclass
class TraceEntry:
    iteration: int
    phase: str
    loglik: float
    elapsed: float


@dataclass
class FitReport:
    trace: list[TraceEntry] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    wall_time: float = 0.0

    @property
    def final_loglik(self) -> float:
        return self.trace[-1].loglik

    def likelihoods(self) -> np.ndarray:
        return np.array([t.loglik for t in self.trace])

    def write_log(self, stream: IO[str]) -> None:
        stream.write("# iteration\tphase\tloglik\telapsed_s\n")
        for t in self.trace:
            stream.write(f"{t.iteration}\t{t.phase}\t{t.loglik:.10g}\t{t.elapsed:.6f}\n")


def rebuild_cache(m: AffiliationMatrices) -> ColumnSumCache:
    """Exact column sums of ``F`` and ``H``."""
    return ColumnSumCache.from_matrices(m)


def update_row(
    u: int,
    side: Side,
    m: AffiliationMatrices,
    cache: ColumnSumCache,
    g: DirectedGraph,
    cfg: FitConfig,
    excluded: DirectedGraph | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One projected-gradient step on row ``u`` of ``F`` or ``H``.

    Returns the new row and the delta to add to the matching column sum; ``m``
    and ``cache`` are left untouched.
    """
    ptr, ind, xp, xi = _side_arrays(g, side, excluded)
    if side == "F":
        X, Y, s = m.F, m.H, cache.sum_H
    else:
        X, Y, s = m.H, m.F, cache.sum_F
    row = X[u].copy()
    K = m.K
    _kernels.update_row(row, u, Y, ptr, ind, xp, xi, s, *cfg._search_args(), np.empty(K), np.empty(K))
    return row, row - X[u]


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n, min(parts, max(n, 1)) + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


class _Runner:
    """Runs chunked kernels either inline or on a thread pool."""

    def __init__(self, n: int, threads: int):
        self.chunks = _chunks(n, threads)
        self.pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def map(self, fn) -> list:
        if self.pool is None:
            return [fn(lo, hi) for lo, hi in self.chunks]
        return list(self.pool.map(lambda c: fn(*c), self.chunks))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def fit(
    g: DirectedGraph,
    K: int,
    seeds: AffiliationMatrices,
    cfg: FitConfig | None = None,
    excluded: DirectedGraph | None = None,
) -> tuple[AffiliationMatrices, FitReport]:
    """Maximise the log-likelihood from ``seeds`` by alternating F and H phases.

    Stops when one full pass improves the likelihood by less than
    ``rel_improvement_stop`` (relative) or after ``max_outer_iterations``.
    Pairs in ``excluded`` are ignored by both likelihood sums.
    """
    cfg = cfg or FitConfig()
    N = g.node_count
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > N:
        raise ValueError(f"K={K} exceeds node count {N}")
    if seeds.F.shape != (N, K):
        raise ValueError(f"seeds must be {N} x {K}, got {seeds.F.shape}")

    m = seeds.copy()
    cache = rebuild_cache(m)
    fptr, find, fxp, fxi = _side_arrays(g, "F", excluded)
    hptr, hind, hxp, hxi = _side_arrays(g, "H", excluded)
    args = cfg._search_args()
    eps = cfg.epsilon_floor
    runner = _Runner(N, cfg.threads)
    per_node = np.empty(N)

    def loglik() -> float:
        runner.map(lambda lo, hi: _kernels.row_objectives(
            m.F, m.H, fptr, find, fxp, fxi, cache.sum_H, eps, lo, hi, per_node))
        value = float(per_node.sum())
        if not np.isfinite(value):
            raise FitError("non-finite log-likelihood")
        return value

    report = FitReport()
    start = time.perf_counter()
    prev = loglik()
    report.trace.append(TraceEntry(0, "init", prev, 0.0))
    try:
        for it in range(1, cfg.max_outer_iterations + 1):
            if cfg.schedule == "interleaved":
                _kernels.update_interleaved(m.F, m.H, fptr, find, hptr, hind, fxp, fxi, hxp, hxi,
                                            cache.sum_F, cache.sum_H, *args)
                cache = rebuild_cache(m)
            else:
                runner.map(lambda lo, hi: _kernels.update_rows(
                    m.F, m.H, fptr, find, fxp, fxi, cache.sum_H, *args, lo, hi))
                _kernels.column_sums(m.F, cache.sum_F)
                report.trace.append(TraceEntry(it, "F", loglik(), time.perf_counter() - start))
                runner.map(lambda lo, hi: _kernels.update_rows(
                    m.H, m.F, hptr, hind, hxp, hxi, cache.sum_F, *args, lo, hi))
                _kernels.column_sums(m.H, cache.sum_H)
            cur = loglik()
            report.trace.append(TraceEntry(it, "H" if cfg.schedule == "phased" else "FH", cur,
                                           time.perf_counter() - start))
            report.iterations = it
            gain = (cur - prev) / abs(prev) if prev != 0 else 0.0
            logger.debug("pass %d loglik %.6f gain %.3e", it, cur, gain)
            prev = cur
            if gain < cfg.rel_improvement_stop:
                report.converged = True
                break
    finally:
        runner.close()
    report.wall_time = time.perf_counter() - start
    return m, report

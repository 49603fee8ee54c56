"""Best-match agreement between ground-truth and detected communities.

Each ground-truth community is matched with its most similar detected one
and vice versa; the two averages are combined with equal weight:

    1/(2|C*|) sum_i max_j s(C*_i, C_j) + 1/(2|C|) sum_j max_i s(C*_i, C_j)
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Collection, Iterable, Literal, Sequence

import numpy as np

from dagm.communities import CommunitySet
from dagm.graph import GroundTruthCommunities

Similarity = Literal["f1", "jaccard"]
Side = Literal["out", "in", "union"]


def set_f1(a: Collection, b: Collection) -> float:
    a, b = set(a), set(b)
    if not a or not b:
        raise ValueError("F1 is undefined for an empty set")
    return 2 * len(a & b) / (len(a) + len(b))


def set_jaccard(a: Collection, b: Collection) -> float:
    a, b = set(a), set(b)
    if not a or not b:
        raise ValueError("Jaccard similarity is undefined for an empty set")
    return len(a & b) / len(a | b)


# (numerator, denominator) of each similarity from overlap and set sizes
_SIMILARITIES: dict[str, Callable] = {
    "f1": lambda inter, na, nb: (2 * inter, na + nb),
    "jaccard": lambda inter, na, nb: (inter, na + nb - inter),
}


def _exact_mean_of_best(num: np.ndarray, den: np.ndarray, axis: int) -> tuple[Fraction, np.ndarray]:
    best = np.argmax(num / den, axis=axis)
    picks = [
        Fraction(int(n), int(d))
        for n, d in zip(np.take_along_axis(num, np.expand_dims(best, axis), axis).ravel(),
                        np.take_along_axis(den, np.expand_dims(best, axis), axis).ravel())
    ]
    return sum(picks, Fraction(0)) / len(picks), np.array([float(p) for p in picks])


@dataclass
class MatchScore:
    f1_score: float
    jaccard_score: float
    truth_best: dict[str, np.ndarray] = field(default_factory=dict)
    detected_best: dict[str, np.ndarray] = field(default_factory=dict)
    excluded: int = 0

    def score(self, similarity: Similarity) -> float:
        return self.f1_score if similarity == "f1" else self.jaccard_score

    def summary(self, metric: Literal["f1", "jaccard", "both"] = "both") -> str:
        lines = []
        if metric in ("f1", "both"):
            lines.append(f"F1\t{self.f1_score:.6f}")
        if metric in ("jaccard", "both"):
            lines.append(f"Jaccard\t{self.jaccard_score:.6f}")
        return "\n".join(lines)

    def table(self, similarity: Similarity = "f1") -> str:
        rows = ["# role\tindex\tbest_match"]
        rows += [f"truth\t{i}\t{v:.6f}" for i, v in enumerate(self.truth_best[similarity])]
        rows += [f"detected\t{j}\t{v:.6f}" for j, v in enumerate(self.detected_best[similarity])]
        return "\n".join(rows)


def _node_sets(detected, side: Side) -> list[frozenset[int]]:
    if isinstance(detected, CommunitySet):
        if side == "out":
            return [c.outgoing for c in detected]
        if side == "in":
            return [c.incoming for c in detected]
        if side == "union":
            return [c.members for c in detected]
        raise ValueError(f"unknown side {side!r}")
    return [frozenset(c) for c in detected]


def _overlaps(truth: Sequence[frozenset[int]], detected: Sequence[frozenset[int]]) -> np.ndarray:
    """``|truth_i & detected_j|`` for every pair, via a node -> detected-community index."""
    where = defaultdict(list)
    for j, c in enumerate(detected):
        for u in c:
            where[u].append(j)
    inter = np.zeros((len(truth), len(detected)), dtype=np.int64)
    for i, c in enumerate(truth):
        for u in c:
            for j in where.get(u, ()):
                inter[i, j] += 1
    return inter


def match_score(
    truth: GroundTruthCommunities | Iterable[Collection[int]],
    detected: CommunitySet | Iterable[Collection[int]],
    side: Side = "union",
) -> MatchScore:
    """Score detected communities against ground truth under both F1 and Jaccard.

    Sets with fewer than two nodes are left out of both collections; the
    number left out is reported as ``excluded``.
    """
    truth_sets = list(truth.communities) if isinstance(truth, GroundTruthCommunities) else [frozenset(c) for c in truth]
    det_sets = _node_sets(detected, side)
    kept_truth = [c for c in truth_sets if len(c) >= 2]
    kept_det = [c for c in det_sets if len(c) >= 2]
    excluded = len(truth_sets) - len(kept_truth) + len(det_sets) - len(kept_det)
    if not kept_truth or not kept_det:
        raise ValueError("match_score needs nonempty truth and detected collections")
    inter = _overlaps(kept_truth, kept_det)
    na = np.array([len(c) for c in kept_truth])[:, None]
    nb = np.array([len(c) for c in kept_det])[None, :]
    result = MatchScore(0.0, 0.0, excluded=excluded)
    for name, sim in _SIMILARITIES.items():
        num, den = sim(inter, na, nb)
        num, den = np.broadcast_arrays(num, den)
        truth_mean, tb = _exact_mean_of_best(num, den, axis=1)
        det_mean, db = _exact_mean_of_best(num, den, axis=0)
        result.truth_best[name] = tb
        result.detected_best[name] = db
        setattr(result, f"{name}_score", float((truth_mean + det_mean) / 2))
    return result

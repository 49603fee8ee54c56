"""Hard communities from fitted memberships, cohesive/2-mode labels, mirror merging."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import IO, Literal

import numpy as np

from dagm.graph import DirectedGraph, GraphFormatError
from dagm.model import AffiliationMatrices

Label = Literal["cohesive", "two_mode"]
DEFAULT_GAMMA = 0.2


def _jaccard(a: frozenset, b: frozenset) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


@dataclass(frozen=True)
class Community:
    outgoing: frozenset[int]
    incoming: frozenset[int]
    label: Label | None = None
    source: tuple[int, ...] = ()

    @property
    def members(self) -> frozenset[int]:
        return self.outgoing | self.incoming

    @property
    def jaccard(self) -> float:
        """``|O & I| / |O | I|``: 1 for a fully cohesive community, 0 for a pure 2-mode one."""
        return _jaccard(self.outgoing, self.incoming)


@dataclass
class CommunitySet:
    communities: list[Community]
    delta: float = field(default=float("nan"))

    def __len__(self) -> int:
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities)

    def counts(self) -> dict[str, int]:
        out = {"cohesive": 0, "two_mode": 0}
        for c in self.communities:
            if c.label is not None:
                out[c.label] += 1
        return out


def membership_threshold(n: int) -> float:
    """Smallest strength ``d`` with ``1 - exp(-d**2) >= 1/n``."""
    if n < 2:
        raise ValueError("membership threshold needs at least 2 nodes")
    return math.sqrt(-math.log1p(-1.0 / n))


def extract(m: AffiliationMatrices, n: int | None = None) -> CommunitySet:
    """Threshold ``F`` and ``H`` at the background-probability strength.

    Communities with fewer than two members in total are dropped; a community
    whose outgoing or incoming side alone is empty is kept.
    """
    n = m.N if n is None else n
    delta = membership_threshold(n)
    out_mask = m.F >= delta
    in_mask = m.H >= delta
    comms = []
    for c in range(m.K):
        o = frozenset(np.flatnonzero(out_mask[:, c]).tolist())
        i = frozenset(np.flatnonzero(in_mask[:, c]).tolist())
        if len(o | i) < 2:
            continue
        comms.append(Community(o, i, source=(c,)))
    return CommunitySet(comms, delta)


def classify(cs: CommunitySet, gamma: float = DEFAULT_GAMMA) -> CommunitySet:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    labelled = [replace(c, label="two_mode" if c.jaccard < gamma else "cohesive") for c in cs]
    return CommunitySet(labelled, cs.delta)


def mirror_similarity(a: Community, b: Community) -> tuple[float, float]:
    return _jaccard(a.outgoing, b.incoming), _jaccard(a.incoming, b.outgoing)


def dedup_mirrors(cs: CommunitySet, similarity_threshold: float = 0.5) -> CommunitySet:
    """Merge pairs that are mirror images of each other (``O1 ~ I2`` and ``I1 ~ O2``).

    Undirected 2-mode structure shows up twice on a reciprocal graph, once per
    direction. Pairs are merged greedily by combined similarity; each
    community takes part in at most one merge per round, and rounds repeat
    until nothing changes. The merged community keeps
    ``O1 | I2`` as outgoing and ``I1 | O2`` as incoming side.
    """
    labelled = any(c.label is not None for c in cs.communities)
    while True:
        merged = _merge_round(cs.communities, similarity_threshold)
        if len(merged) == len(cs.communities):
            break
        cs = CommunitySet(merged, cs.delta)
    return classify(cs) if labelled else cs


def _merge_round(comms: list[Community], similarity_threshold: float) -> list[Community]:
    candidates = []
    for a in range(len(comms)):
        for b in range(a + 1, len(comms)):
            s1, s2 = mirror_similarity(comms[a], comms[b])
            if s1 >= similarity_threshold and s2 >= similarity_threshold:
                candidates.append((-(s1 + s2), a, b))
    candidates.sort()
    partner: dict[int, int] = {}
    for _, a, b in candidates:
        if a not in partner and b not in partner:
            partner[a] = b
            partner[b] = a
    merged = []
    for idx, c in enumerate(comms):
        if idx not in partner:
            merged.append(c)
        elif idx < partner[idx]:
            d = comms[partner[idx]]
            merged.append(Community(c.outgoing | d.incoming, c.incoming | d.outgoing, source=c.source + d.source))
    return merged


def write_communities(cs: CommunitySet, g: DirectedGraph, stream: IO[str]) -> None:
    """``c<id>\\t<label>\\tOUT:<labels>\\tIN:<labels>``, one community per line."""
    for idx, c in enumerate(cs):
        out = " ".join(g.label(u) for u in sorted(c.outgoing))
        inc = " ".join(g.label(u) for u in sorted(c.incoming))
        stream.write(f"c{idx}\t{c.label or 'unlabeled'}\tOUT:{out}\tIN:{inc}\n")


def read_communities(stream: IO[str], g: DirectedGraph | None = None) -> CommunitySet:
    """Parse the format written by :func:`write_communities`.

    Labels are resolved to dense ids through ``g``; without a graph the
    members stay as label strings.
    """
    index = g.index_of() if g is not None else None
    comms = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4 or not parts[2].startswith("OUT:") or not parts[3].startswith("IN:"):
            raise GraphFormatError("expected c<id>, label, OUT:..., IN:... fields", lineno)
        sides = []
        for text in (parts[2][4:], parts[3][3:]):
            if index is None:
                sides.append(frozenset(text.split()))
                continue
            ids = set()
            for tok in text.split():
                if tok not in index:
                    raise GraphFormatError(f"unknown node label {tok!r}", lineno)
                ids.add(index[tok])
            sides.append(frozenset(ids))
        label = parts[1] if parts[1] in ("cohesive", "two_mode") else None
        comms.append(Community(sides[0], sides[1], label))
    return CommunitySet(comms)

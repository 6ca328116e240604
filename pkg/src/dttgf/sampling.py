"""Coverage-driven extraction of overlapping subgraphs.

Seeds are chosen where coverage is lowest, then a subgraph is grown along
triangulation edges, always pulling in the frontier node nearest to the
anchor (by default the most recently added member). Extraction repeats
until every node is covered min_cover times or the subgraph cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, SizeError

ANCHOR_MODES = ("recent", "seed", "set")


@dataclass
class SamplingParams:
    """Knobs for subgraph extraction; None picks the size-scaled default."""

    m: int | None = None
    min_cover: int = 3
    max_subgraphs: int | None = None
    anchor: str = "recent"

    def resolve(self, n: int) -> tuple[int, int, int, str]:
        """Concrete (m, min_cover, max_subgraphs, anchor) for an n-node instance."""
        if self.m is None:
            m = 50 if n >= 500 else max(10, n // 4)
            m = max(2, min(m, n))
        else:
            m = int(self.m)
            if not 2 <= m <= n:
                raise ConfigError(f"sampling.m must be in [2, {n}], got {m}")
        if self.min_cover < 1:
            raise ConfigError(f"sampling.min_cover must be >= 1, got {self.min_cover}")
        if self.max_subgraphs is None:
            # Coverage must be reachable, so the implicit cap is the worst
            # case of the extraction loop itself: each pass covers at least
            # the current least-covered node, so min coverage rises by one
            # at least every n extractions.
            cap = n * int(self.min_cover)
        else:
            cap = int(self.max_subgraphs)
            if cap < 1:
                raise ConfigError(f"sampling.max_subgraphs must be >= 1, got {cap}")
        if self.anchor not in ANCHOR_MODES:
            raise ConfigError(f"sampling.anchor must be one of {ANCHOR_MODES}, got {self.anchor!r}")
        return m, int(self.min_cover), cap, self.anchor


class CoverageCounter:
    """How many extracted subgraphs each node belongs to."""

    def __init__(self, n: int):
        self.counts = np.zeros(int(n), dtype=np.int64)

    def increment(self, nodes):
        self.counts[np.asarray(nodes, dtype=np.int64)] += 1

    def min(self) -> int:
        return int(self.counts.min())


class SubGraph:
    """An ordered subset of instance nodes (growth order preserved)."""

    def __init__(self, nodes, parent_n: int, used_fallback: bool = False):
        self.nodes = np.array(nodes, dtype=np.int64)
        self.parent_n = int(parent_n)
        self.used_fallback = bool(used_fallback)
        if len(self.nodes) == 0:
            raise DomainError("a subgraph needs at least one node")
        if self.nodes.min() < 0 or self.nodes.max() >= self.parent_n:
            raise DomainError("subgraph node out of range")
        if len(np.unique(self.nodes)) != len(self.nodes):
            raise DomainError("subgraph nodes must be unique")

    @property
    def size(self) -> int:
        return len(self.nodes)

    def local_index(self) -> dict[int, int]:
        return {int(g): l for l, g in enumerate(self.nodes)}

    def to_global(self, local_order) -> np.ndarray:
        return self.nodes[np.asarray(local_order, dtype=np.int64)]

    def __repr__(self):
        return f"SubGraph(size={self.size}, parent_n={self.parent_n})"


def pick_seed(counter: CoverageCounter) -> int:
    """Least-covered node; ties resolve to the smallest index."""
    return int(np.argmin(counter.counts))


def grow_subgraph(seed, dt, inst, m, counter, anchor="recent") -> SubGraph:
    """Grow an m-node subgraph from seed along triangulation edges.

    Each step adds the frontier node nearest to the anchor (ties to the
    smallest index). If the frontier ever empties before m nodes are in,
    the globally nearest non-member is pulled in instead and the subgraph
    is flagged, since its induced adjacency may then be disconnected.
    """
    n = dt.n
    if not 0 <= seed < n:
        raise DomainError(f"seed {seed} out of range for n={n}")
    if m > n:
        raise SizeError(f"subgraph size {m} exceeds node count {n}")
    if m < 1:
        raise DomainError(f"subgraph size must be >= 1, got {m}")
    if anchor not in ANCHOR_MODES:
        raise ConfigError(f"anchor must be one of {ANCHOR_MODES}, got {anchor!r}")

    pts = inst.points
    neighbor_lists = dt.neighbor_lists
    in_sub = np.zeros(n, dtype=bool)
    in_sub[seed] = True
    order = [int(seed)]
    frontier = {int(v) for v in neighbor_lists[seed]}
    used_fallback = False

    while len(order) < m:
        if anchor == "seed":
            anchors = [seed]
        elif anchor == "set":
            anchors = order
        else:
            anchors = [order[-1]]
        if frontier:
            cand = np.fromiter(sorted(frontier), dtype=np.int64, count=len(frontier))
        else:
            cand = np.flatnonzero(~in_sub)
            used_fallback = True
        diff = pts[cand][:, None, :] - pts[np.asarray(anchors, dtype=np.int64)][None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
        pick = int(cand[int(np.argmin(dist))])
        frontier.discard(pick)
        in_sub[pick] = True
        order.append(pick)
        for v in neighbor_lists[pick]:
            vi = int(v)
            if not in_sub[vi]:
                frontier.add(vi)

    counter.increment(order)
    return SubGraph(order, n, used_fallback)


def extract_subgraphs(dt, inst, params: SamplingParams) -> list[SubGraph]:
    """Extract subgraphs until min_cover coverage or the cap is reached."""
    n = dt.n
    m, min_cover, cap, anchor = params.resolve(n)
    counter = CoverageCounter(n)
    subs: list[SubGraph] = []
    while counter.min() < min_cover and len(subs) < cap:
        seed = pick_seed(counter)
        subs.append(grow_subgraph(seed, dt, inst, m, counter, anchor))
    return subs

"""Fusing sub-solver results into one global edge heatmap.

Every edge value is normalized by its selection count: the number of
extracted subgraphs that contain both endpoints. An edge picked by every
subgraph that ever saw it lands at exactly 1.0; an edge picked by half of
them at 0.5. Absent entries mean zero throughout.

Sums over per-subgraph contributions use math.fsum, which computes the
exact sum before rounding once, so merged values are bit-identical no
matter how the sub-results are ordered.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, DomainError, InternalError, MalformedTourError


def edge_key(i: int, j: int) -> tuple[int, int]:
    """Canonical undirected edge key with i < j."""
    if i == j:
        raise DomainError(f"self edge ({i}, {j})")
    return (i, j) if i < j else (j, i)


class Heatmap:
    """Sparse symmetric edge-probability map; absent entries are zero."""

    def __init__(self, n: int, entries: dict | None = None):
        self.n = int(n)
        self.entries: dict[tuple[int, int], float] = {}
        if entries:
            for (i, j), p in entries.items():
                i, j = int(i), int(j)
                if not 0 <= i < j < self.n:
                    raise DomainError(f"edge ({i}, {j}) invalid for n={self.n}")
                p = float(p)
                if not 0.0 <= p <= 1.0:
                    raise DomainError(f"probability {p} for edge ({i}, {j}) outside [0, 1]")
                if p > 0.0:
                    self.entries[(i, j)] = p

    def get(self, i: int, j: int) -> float:
        return self.entries.get(edge_key(i, j), 0.0)

    def set(self, i: int, j: int, p: float):
        key = edge_key(i, j)
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"probability {p} outside [0, 1]")
        if p > 0.0:
            self.entries[key] = p
        else:
            self.entries.pop(key, None)

    def copy(self) -> "Heatmap":
        out = Heatmap(self.n)
        out.entries = dict(self.entries)
        return out

    def support_size(self) -> int:
        return len(self.entries)

    def max_value(self) -> float:
        return max(self.entries.values()) if self.entries else 0.0

    def __eq__(self, other):
        if not isinstance(other, Heatmap):
            return NotImplemented
        return self.n == other.n and self.entries == other.entries

    def __repr__(self):
        return f"Heatmap(n={self.n}, support={len(self.entries)})"


class SelectionCounter:
    """Counts, per node pair, the subgraphs containing both endpoints."""

    def __init__(self, subgraphs, n: int):
        self.n = int(n)
        members: list[set[int]] = [set() for _ in range(self.n)]
        for idx, sub in enumerate(subgraphs):
            if sub.parent_n != self.n:
                raise DimensionError(
                    f"subgraph over {sub.parent_n} nodes cannot merge into n={self.n}"
                )
            for g in sub.nodes:
                members[int(g)].add(idx)
        self._members = members
        self._cache: dict[tuple[int, int], int] = {}

    def count(self, i: int, j: int) -> int:
        key = edge_key(i, j)
        c = self._cache.get(key)
        if c is None:
            a, b = self._members[key[0]], self._members[key[1]]
            if len(b) < len(a):
                a, b = b, a
            c = sum(1 for s in a if s in b)
            self._cache[key] = c
        return c


def _tour_edges_global(sub, order) -> list[tuple[int, int]]:
    order = np.asarray(order, dtype=np.int64)
    if len(order) != sub.size or len(np.unique(order)) != len(order):
        raise MalformedTourError("sub-tour is not a permutation of its subgraph")
    if order.min() < 0 or order.max() >= sub.size:
        raise MalformedTourError("sub-tour index outside its subgraph")
    g = sub.nodes[order]
    return [edge_key(int(g[k]), int(g[(k + 1) % len(g)])) for k in range(len(g))]


def merge_one_stage(results, n: int) -> Heatmap:
    """Merge (subgraph, sub-tour) pairs into a heatmap.

    Each entry is the number of sub-tours using the edge divided by its
    selection count, so values land in (0, 1].
    """
    counts: dict[tuple[int, int], int] = {}
    subs = []
    for sub, res in results:
        if sub.parent_n != n:
            raise DimensionError(f"subgraph over {sub.parent_n} nodes, expected {n}")
        subs.append(sub)
        for key in _tour_edges_global(sub, res.order):
            counts[key] = counts.get(key, 0) + 1
    sel = SelectionCounter(subs, n)
    out = Heatmap(n)
    for key, c in counts.items():
        s = sel.count(*key)
        if s < c:
            raise InternalError(f"edge {key} used {c} times but selected by {s} subgraphs")
        out.entries[key] = c / s
    return out


def merge_two_stage(results, n: int) -> Heatmap:
    """Merge (subgraph, sub-heatmap) pairs into a heatmap.

    Per-edge sub-heatmap values are summed exactly (math.fsum) and divided
    by the selection count; values stay within [0, 1] because each of the
    s contributing subgraphs adds at most 1.
    """
    sums: dict[tuple[int, int], list[float]] = {}
    subs = []
    for sub, res in results:
        if sub.parent_n != n:
            raise DimensionError(f"subgraph over {sub.parent_n} nodes, expected {n}")
        subs.append(sub)
        for (li, lj), p in res.entries.items():
            if not 0 <= li < lj < sub.size:
                raise DomainError(f"local edge ({li}, {lj}) invalid for subgraph of {sub.size}")
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"sub-heatmap value {p} outside [0, 1]")
            key = edge_key(int(sub.nodes[li]), int(sub.nodes[lj]))
            sums.setdefault(key, []).append(p)
    sel = SelectionCounter(subs, n)
    out = Heatmap(n)
    for key, vals in sums.items():
        s = sel.count(*key)
        if s < len(vals):
            raise InternalError(f"edge {key} contributed {len(vals)} times but selected by {s}")
        p = math.fsum(vals) / s
        if p > 0.0:
            out.entries[key] = min(p, 1.0)
    return out


def apply_dt_filter(heatmap: Heatmap, dt) -> Heatmap:
    """Zero out (drop) every entry that is not a triangulation edge."""
    if heatmap.n != dt.n:
        raise DimensionError(f"heatmap over {heatmap.n} nodes, triangulation over {dt.n}")
    out = Heatmap(heatmap.n)
    adjacency = dt.adjacency
    out.entries = {key: p for key, p in heatmap.entries.items() if key in adjacency}
    return out

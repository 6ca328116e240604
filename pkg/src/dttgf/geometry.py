"""Planar Delaunay triangulation via incremental insertion (Bowyer-Watson).

Points are expected on the unit-square scale; the cocircular tolerance
``EPS_GEO`` is an absolute threshold calibrated for coordinates in [0, 1].
Exactly cocircular point groups are resolved deterministically: a point
sitting on a triangle's circumcircle counts as outside, so no flip or
cavity growth happens on ties and identical inputs always yield identical
triangulations.

Degenerate inputs are handled explicitly rather than through perturbation:
two points give a single edge, a fully collinear set becomes a path graph
in coordinate order, and duplicate points are rejected.
"""

from __future__ import annotations

from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateTriangleError,
    DomainError,
    DuplicatePointsError,
    InternalError,
    SizeError,
)

# Absolute predicate tolerance on unit-square coordinates. Determinant
# magnitudes at or below this are treated as exact ties.
EPS_GEO = 1e-12

# Distance factor for the enclosing super-triangle. Far enough that real
# circumcircles reaching a super vertex would require a point triple
# collinear to ~1e-8, which the collinear fallback and EPS_GEO territory
# already cover; near enough that doubles keep the predicate signs stable.
_SUPER_SCALE = 1e8


class InCircle(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    COCIRCULAR = "cocircular"


def _orient(ax, ay, bx, by, cx, cy):
    """Twice the signed area of triangle (a, b, c); positive when CCW."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _incircle(ax, ay, bx, by, cx, cy, px, py):
    """In-circle determinant for CCW (a, b, c); positive when p is inside."""
    adx = ax - px
    ady = ay - py
    bdx = bx - px
    bdy = by - py
    cdx = cx - px
    cdy = cy - py
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )


def in_circumcircle(a, b, c, p) -> InCircle:
    """Classify point p against the circumcircle of triangle (a, b, c).

    The triangle must not be degenerate; its orientation is normalized
    internally, so callers may pass the corners in either winding. Ties
    within EPS_GEO of the determinant's zero are reported as COCIRCULAR.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    cx, cy = float(c[0]), float(c[1])
    o = _orient(ax, ay, bx, by, cx, cy)
    if abs(o) <= EPS_GEO:
        raise DegenerateTriangleError(f"collinear triangle corners {a}, {b}, {c}")
    if o < 0:
        bx, by, cx, cy = cx, cy, bx, by
    det = _incircle(ax, ay, bx, by, cx, cy, float(p[0]), float(p[1]))
    if det > EPS_GEO:
        return InCircle.INSIDE
    if det < -EPS_GEO:
        return InCircle.OUTSIDE
    return InCircle.COCIRCULAR


class DelaunayGraph:
    """Triangulation result: triangle list plus the edge set it induces.

    ``triangles`` holds index triples sorted within each triple and across
    the list, ``adjacency`` the canonical (i < j) undirected edges. For
    n = 2 and for fully collinear inputs the triangle list is empty and
    adjacency carries the path edges.
    """

    def __init__(self, n: int, triangles: Iterable, adjacency: Iterable):
        self.n = int(n)
        self.triangles = sorted(tuple(sorted(map(int, t))) for t in triangles)
        self.adjacency = {(int(i), int(j)) for i, j in adjacency}

    def __eq__(self, other):
        if not isinstance(other, DelaunayGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.triangles == other.triangles
            and self.adjacency == other.adjacency
        )

    def __repr__(self):
        return f"DelaunayGraph(n={self.n}, triangles={len(self.triangles)}, edges={len(self.adjacency)})"

    @cached_property
    def neighbor_lists(self) -> list[np.ndarray]:
        """Per-node sorted neighbor arrays derived from the adjacency."""
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.adjacency:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [np.array(sorted(ns), dtype=np.int64) for ns in nbrs]

    def neighbors(self, i: int) -> np.ndarray:
        return self.neighbor_lists[i]


class _Triangulator:
    """Mutable Bowyer-Watson state over the input points plus 3 super vertices."""

    def __init__(self, pts: np.ndarray):
        n = len(pts)
        xmin, ymin = pts.min(axis=0)
        xmax, ymax = pts.max(axis=0)
        span = max(xmax - xmin, ymax - ymin, 1.0)
        big = _SUPER_SCALE * span
        cx = (xmin + xmax) / 2.0
        cy = (ymin + ymax) / 2.0
        self.n = n
        self.xs = [float(x) for x in pts[:, 0]] + [cx - 3 * big, cx + 3 * big, cx]
        self.ys = [float(y) for y in pts[:, 1]] + [cy - big, cy - big, cy + 3 * big]
        self.triangles: dict[int, tuple[int, int, int]] = {0: (n, n + 1, n + 2)}
        self.edge_map: dict[tuple[int, int], list[int]] = {}
        for u, v in ((n, n + 1), (n + 1, n + 2), (n, n + 2)):
            self.edge_map[(u, v)] = [0]
        self.next_id = 1
        self.last_tid = 0

    def _orient_idx(self, u: int, v: int, px: float, py: float) -> float:
        xs, ys = self.xs, self.ys
        return _orient(xs[u], ys[u], xs[v], ys[v], px, py)

    def _conflict(self, tid: int, px: float, py: float) -> float:
        a, b, c = self.triangles[tid]
        xs, ys = self.xs, self.ys
        return _incircle(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c], px, py)

    def _across(self, u: int, v: int, tid: int):
        key = (u, v) if u < v else (v, u)
        for t in self.edge_map.get(key, ()):
            if t != tid:
                return t
        return None

    def _edge_add(self, u: int, v: int, tid: int):
        key = (u, v) if u < v else (v, u)
        self.edge_map.setdefault(key, []).append(tid)

    def _edge_drop(self, u: int, v: int, tid: int):
        key = (u, v) if u < v else (v, u)
        lst = self.edge_map[key]
        lst.remove(tid)
        if not lst:
            del self.edge_map[key]

    def _locate(self, px: float, py: float) -> int:
        """Walk toward the triangle containing (px, py), falling back to a scan."""
        tid = self.last_tid if self.last_tid in self.triangles else next(iter(self.triangles))
        prev = -1
        for _ in range(4 * len(self.triangles) + 64):
            a, b, c = self.triangles[tid]
            best = None
            best_val = -EPS_GEO
            fallback = None
            for u, v in ((a, b), (b, c), (c, a)):
                o = self._orient_idx(u, v, px, py)
                if o < best_val:
                    nb = self._across(u, v, tid)
                    if nb is None:
                        continue
                    if nb == prev:
                        fallback = (o, nb)
                        continue
                    best_val = o
                    best = nb
            if best is None:
                if fallback is not None and fallback[0] < -EPS_GEO:
                    best = fallback[1]
                else:
                    return tid
            prev, tid = tid, best
        for tid, (a, b, c) in self.triangles.items():
            if (
                self._orient_idx(a, b, px, py) >= -EPS_GEO
                and self._orient_idx(b, c, px, py) >= -EPS_GEO
                and self._orient_idx(c, a, px, py) >= -EPS_GEO
            ):
                return tid
        raise InternalError("point location failed; no triangle contains the point")

    def insert(self, pi: int):
        px, py = self.xs[pi], self.ys[pi]
        t0 = self._locate(px, py)
        bad_list = [t0]
        bad = {t0}

        # If the new point sits exactly on an edge of the located triangle,
        # the triangle across that edge must be split as well even though
        # the cocircular tie-break keeps it out of the conflict region.
        a, b, c = self.triangles[t0]
        for u, v in ((a, b), (b, c), (c, a)):
            if abs(self._orient_idx(u, v, px, py)) <= EPS_GEO:
                nb = self._across(u, v, t0)
                if nb is not None and nb not in bad:
                    bad.add(nb)
                    bad_list.append(nb)

        qi = 0
        while qi < len(bad_list):
            t = bad_list[qi]
            qi += 1
            ta, tb, tc = self.triangles[t]
            for u, v in ((ta, tb), (tb, tc), (tc, ta)):
                nb = self._across(u, v, t)
                if nb is None or nb in bad:
                    continue
                if self._conflict(nb, px, py) > EPS_GEO:
                    bad.add(nb)
                    bad_list.append(nb)

        # Collect the directed boundary of the conflict region. Any boundary
        # edge the new point is not strictly left of would produce a flat
        # fan triangle, so the neighbor behind it is absorbed and the
        # boundary recomputed.
        while True:
            boundary = []
            grow = None
            for t in bad_list:
                ta, tb, tc = self.triangles[t]
                for u, v in ((ta, tb), (tb, tc), (tc, ta)):
                    nb = self._across(u, v, t)
                    if nb is not None and nb in bad:
                        continue
                    if self._orient_idx(u, v, px, py) <= EPS_GEO:
                        if nb is None:
                            raise InternalError("conflict region reached the outer boundary")
                        grow = nb
                        break
                    boundary.append((u, v))
                if grow is not None:
                    break
            if grow is None:
                break
            bad.add(grow)
            bad_list.append(grow)

        heads = {u for u, _ in boundary}
        tails = {v for _, v in boundary}
        if len(heads) != len(boundary) or len(tails) != len(boundary) or heads != tails:
            raise InternalError("conflict-region boundary is not a simple cycle")

        for t in bad_list:
            ta, tb, tc = self.triangles.pop(t)
            self._edge_drop(ta, tb, t)
            self._edge_drop(tb, tc, t)
            self._edge_drop(tc, ta, t)
        for u, v in boundary:
            tid = self.next_id
            self.next_id += 1
            self.triangles[tid] = (u, v, pi)
            self._edge_add(u, v, tid)
            self._edge_add(v, pi, tid)
            self._edge_add(pi, u, tid)
            self.last_tid = tid


def _legalize(triangles: list[tuple[int, int, int]], xs, ys) -> list[tuple[int, int, int]]:
    """Flip edges until every interior edge is locally Delaunay.

    The incremental pass already produces a Delaunay triangulation for
    inputs in general position; this pass is a cheap guarantee that the
    empty-circumcircle property holds for the final real triangles even
    when super-vertex roundoff nicked an intermediate test.
    """
    tris: dict[int, tuple[int, int, int]] = dict(enumerate(triangles))
    edge_map: dict[tuple[int, int], list[int]] = {}
    for tid, (a, b, c) in tris.items():
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_map.setdefault(key, []).append(tid)
    queue = [key for key, lst in edge_map.items() if len(lst) == 2]
    next_id = len(triangles)
    budget = 40 * len(triangles) + 1000
    while queue:
        key = queue.pop()
        lst = edge_map.get(key)
        if lst is None or len(lst) != 2:
            continue
        t1, t2 = lst
        tri1, tri2 = tris[t1], tris[t2]
        # Orient the shared edge as (p, q) directed in t1, (q, p) in t2.
        p = q = w = x = None
        for i in range(3):
            u, v = tri1[i], tri1[(i + 1) % 3]
            if (u, v) == key or (v, u) == key:
                p, q, w = u, v, tri1[(i + 2) % 3]
                break
        for i in range(3):
            u, v = tri2[i], tri2[(i + 1) % 3]
            if (u, v) == (q, p):
                x = tri2[(i + 2) % 3]
                break
        if x is None:
            raise InternalError("inconsistent winding between edge-adjacent triangles")
        det = _incircle(xs[p], ys[p], xs[q], ys[q], xs[w], ys[w], xs[x], ys[x])
        if det <= EPS_GEO:
            continue
        if (
            _orient(xs[p], ys[p], xs[x], ys[x], xs[w], ys[w]) <= EPS_GEO
            or _orient(xs[x], ys[x], xs[q], ys[q], xs[w], ys[w]) <= EPS_GEO
        ):
            continue
        budget -= 1
        if budget < 0:
            raise InternalError("edge-flip pass did not settle")
        for tid, (ta, tb, tc) in ((t1, tri1), (t2, tri2)):
            del tris[tid]
            for u, v in ((ta, tb), (tb, tc), (tc, ta)):
                k = (u, v) if u < v else (v, u)
                edge_map[k].remove(tid)
                if not edge_map[k]:
                    del edge_map[k]
        for tri in ((p, x, w), (x, q, w)):
            tid = next_id
            next_id += 1
            tris[tid] = tri
            for u, v in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                k = (u, v) if u < v else (v, u)
                edge_map.setdefault(k, []).append(tid)
        for k in (
            (p, x) if p < x else (x, p),
            (x, q) if x < q else (q, x),
            (q, w) if q < w else (w, q),
            (w, p) if w < p else (p, w),
        ):
            queue.append(k)
    return list(tris.values())


def _collinear_order(pts: np.ndarray):
    """Indices of pts sorted by (x, y); used for the collinear fallback."""
    return np.lexsort((pts[:, 1], pts[:, 0]))


def delaunay_triangulate(points) -> DelaunayGraph:
    """Delaunay-triangulate a point set on the unit-square scale.

    Returns a DelaunayGraph whose adjacency is exactly the union of
    triangle sides. n = 2 yields the single edge, fully collinear inputs
    a path graph in coordinate order. Duplicate points and n < 2 raise.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError(f"expected an (n, 2) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("point coordinates must be finite")
    n = len(pts)
    if n < 2:
        raise SizeError(f"need at least 2 points, got {n}")

    seen: dict[tuple[float, float], int] = {}
    dup_idx = set()
    for i, (x, y) in enumerate(pts):
        key = (float(x), float(y))
        if key in seen:
            dup_idx.add(seen[key])
            dup_idx.add(i)
        else:
            seen[key] = i
    if dup_idx:
        raise DuplicatePointsError(dup_idx)

    if n == 2:
        return DelaunayGraph(2, [], {(0, 1)})

    # Fully collinear sets cannot be triangulated; fall back to the path.
    x0, y0 = float(pts[0, 0]), float(pts[0, 1])
    ref = None
    for k in range(1, n):
        if pts[k, 0] != x0 or pts[k, 1] != y0:
            ref = k
            break
    xr, yr = float(pts[ref, 0]), float(pts[ref, 1])
    collinear = True
    for i in range(1, n):
        if abs(_orient(x0, y0, xr, yr, float(pts[i, 0]), float(pts[i, 1]))) > EPS_GEO:
            collinear = False
            break
    if collinear:
        order = _collinear_order(pts)
        adjacency = set()
        for a, b in zip(order[:-1], order[1:]):
            adjacency.add((min(int(a), int(b)), max(int(a), int(b))))
        return DelaunayGraph(n, [], adjacency)

    tr = _Triangulator(pts)
    for i in range(n):
        tr.insert(i)

    real = [t for t in tr.triangles.values() if t[0] < n and t[1] < n and t[2] < n]
    real = _legalize(real, tr.xs, tr.ys)

    adjacency = set()
    covered = np.zeros(n, dtype=bool)
    for a, b, c in real:
        covered[[a, b, c]] = True
        for u, v in ((a, b), (b, c), (c, a)):
            adjacency.add((u, v) if u < v else (v, u))
    if not covered.all():
        raise InternalError("triangulation does not cover every input point")
    if len(adjacency) > 3 * n - 6:
        raise InternalError("triangulation exceeds the planar edge bound")

    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i, j in adjacency:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen_nodes = np.zeros(n, dtype=bool)
    stack = [0]
    seen_nodes[0] = True
    while stack:
        u = stack.pop()
        for v in nbrs[u]:
            if not seen_nodes[v]:
                seen_nodes[v] = True
                stack.append(v)
    if not seen_nodes.all():
        raise InternalError("triangulation adjacency is disconnected")

    return DelaunayGraph(n, real, adjacency)

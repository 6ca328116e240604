"""Shared test oracles, deliberately independent of the library internals.

The brute-force tour oracle enumerates permutations, the circumcircle
check locates circumcenters through a linear solve instead of the sign
determinant used in production code, and the nearest-neighbor builder is
a plain loop. Agreement between these and the package is the evidence
the tests rely on.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def cycle_length(points, order) -> float:
    total = 0.0
    n = len(order)
    for k in range(n):
        a = points[order[k]]
        b = points[order[(k + 1) % n]]
        total += math.hypot(a[0] - b[0], a[1] - b[1])
    return total


def brute_force_tour(points):
    """Exact TSP oracle: best (length, order) over all tours.

    Fixes node 0 first and skips reversed duplicates, so it is usable up
    to roughly 10 nodes.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    assert 2 <= n <= 10, "oracle is factorial; keep instances tiny"
    if n == 2:
        return 2.0 * math.dist(pts[0], pts[1]), [0, 1]
    best_len = math.inf
    best_order = None
    for perm in itertools.permutations(range(1, n)):
        if perm[0] > perm[-1]:
            continue  # same cycle traversed backwards
        order = (0,) + perm
        length = cycle_length(pts, order)
        if length < best_len:
            best_len = length
            best_order = list(order)
    return best_len, best_order


def circumcircle_violations(points, triangles, slack=1e-9):
    """Count (triangle, point) pairs where a point sits inside a circumcircle.

    The circumcenter comes from solving the two perpendicular-bisector
    equations directly, so this shares no code path with the production
    in-circle predicate. ``slack`` absorbs floating-point ties from
    cocircular point sets.
    """
    pts = np.asarray(points, dtype=np.float64)
    violations = 0
    for a, b, c in triangles:
        ax, ay = pts[a]
        bx, by = pts[b]
        cx, cy = pts[c]
        mat = np.array([[bx - ax, by - ay], [cx - ax, cy - ay]])
        rhs = 0.5 * np.array(
            [bx * bx - ax * ax + by * by - ay * ay, cx * cx - ax * ax + cy * cy - ay * ay]
        )
        center = np.linalg.solve(mat, rhs)
        radius = math.hypot(ax - center[0], ay - center[1])
        dists = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1])
        inside = dists < radius - slack
        inside[[a, b, c]] = False
        violations += int(inside.sum())
    return violations


def nn_tour_from(points, start=0):
    """Plain nearest-neighbor tour, smallest index on ties."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    unvisited = set(range(n))
    unvisited.discard(start)
    order = [start]
    while unvisited:
        here = pts[order[-1]]
        best = min(
            unvisited,
            key=lambda v: (math.hypot(pts[v][0] - here[0], pts[v][1] - here[1]), v),
        )
        unvisited.discard(best)
        order.append(best)
    return order


def tour_edge_set(order):
    """Canonical (min, max) edge pairs of a cyclic tour."""
    n = len(order)
    return {
        (min(order[k], order[(k + 1) % n]), max(order[k], order[(k + 1) % n]))
        for k in range(n)
    }


def indicator_heatmap(order, n):
    """Heatmap that puts probability 1 on exactly the edges of ``order``."""
    from dttgf.merge import Heatmap

    return Heatmap(n, {edge: 1.0 for edge in tour_edge_set(order)})


def uniform_points(n, seed):
    """Test-local uniform point cloud, independent of dttgf.instance."""
    return np.random.default_rng(seed).random((n, 2))

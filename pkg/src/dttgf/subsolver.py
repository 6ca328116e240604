"""Solvers applied to individual subgraphs.

Three interchangeable kinds: an exact dynamic program for tiny inputs, a
nearest-neighbor + 2-opt heuristic returning one tour, and an ensemble
that runs the heuristic repeatedly and returns edge frequencies instead
of a single tour. Sub-solver output is always in local subgraph indices;
mapping back to instance nodes happens at merge time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InternalError, SizeError
from .instance import Tour, TspInstance

HELD_KARP_MAX = 16


@dataclass
class SolverSpec:
    """Which sub-solver to run and with what effort."""

    kind: str = "nn2opt"
    restarts: int = 3
    ensemble_runs: int = 16
    neighbor_k: int = 10

    def validate(self):
        if self.kind not in ("exact", "nn2opt", "ensemble"):
            raise ConfigError(f"unknown solver kind {self.kind!r}")
        if self.restarts < 1:
            raise ConfigError(f"solver.restarts must be >= 1, got {self.restarts}")
        if self.ensemble_runs < 1:
            raise ConfigError(f"solver.ensemble_R must be >= 1, got {self.ensemble_runs}")
        if self.neighbor_k < 1:
            raise ConfigError(f"solver.neighbor_k must be >= 1, got {self.neighbor_k}")


@dataclass
class SubTour:
    """A single tour over local subgraph indices."""

    order: np.ndarray


@dataclass
class SubHeatmap:
    """Edge frequencies over local subgraph indices; values in (0, 1]."""

    size: int
    entries: dict


SubResult = SubTour | SubHeatmap


def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def held_karp_exact(inst: TspInstance) -> Tour:
    """Optimal tour by subset dynamic programming; limited to n <= 16."""
    n = inst.n
    if n > HELD_KARP_MAX:
        raise SizeError(f"exact solver handles n <= {HELD_KARP_MAX}, got {n}")
    dist = _pairwise(inst.points)
    full = 1 << n
    dp = np.full((full, n), np.inf)
    parent = np.full((full, n), -1, dtype=np.int8)
    dp[1, 0] = 0.0
    for mask in range(3, full, 2):
        for last in range(1, n):
            bit = 1 << last
            if not mask & bit:
                continue
            vals = dp[mask ^ bit] + dist[:, last]
            best = int(np.argmin(vals))
            dp[mask, last] = vals[best]
            parent[mask, last] = best
    closing = dp[full - 1] + dist[:, 0]
    last = int(np.argmin(closing))
    order = []
    mask = full - 1
    while last != -1 and mask:
        order.append(last)
        mask, last = mask ^ (1 << last), int(parent[mask, last])
    order.reverse()
    if len(order) != n or order[0] != 0:
        raise InternalError("exact DP tour reconstruction failed")
    return Tour(order)


def _nn_tour(dist: np.ndarray, start: int) -> np.ndarray:
    n = len(dist)
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    order[0] = start
    visited[start] = True
    cur = start
    for k in range(1, n):
        row = np.where(visited, np.inf, dist[cur])
        cur = int(np.argmin(row))
        order[k] = cur
        visited[cur] = True
    return order


def _two_opt_dense(dist: np.ndarray, order: np.ndarray) -> np.ndarray:
    """First-improvement 2-opt over a dense matrix, run to a local optimum.

    Every position pair is a candidate, so no improving single exchange
    survives when this returns.
    """
    n = len(order)
    if n < 4:
        return order
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = order[i], order[i + 1]
            js = np.arange(i + 2, n - 1 if i == 0 else n)
            if len(js) == 0:
                continue
            c = order[js]
            d = order[(js + 1) % n]
            delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
            hits = np.flatnonzero(delta < -1e-12)
            if len(hits):
                j = int(js[hits[0]])
                order[i + 1 : j + 1] = order[i + 1 : j + 1][::-1]
                improved = True
    return order


def _tour_len(dist: np.ndarray, order: np.ndarray) -> float:
    return float(dist[order, np.roll(order, -1)].sum())


# Largest subgraph for which a dense distance matrix is materialized;
# beyond it, distances are recomputed and 2-opt uses candidate lists.
DENSE_MATRIX_MAX = 2000


def _nn_tour_points(pts: np.ndarray, start: int) -> np.ndarray:
    m = len(pts)
    visited = np.zeros(m, dtype=bool)
    order = np.empty(m, dtype=np.int64)
    order[0] = start
    visited[start] = True
    cur = start
    for k in range(1, m):
        d = np.hypot(pts[:, 0] - pts[cur, 0], pts[:, 1] - pts[cur, 1])
        d[visited] = np.inf
        cur = int(np.argmin(d))
        order[k] = cur
        visited[cur] = True
    return order


def _improve_sparse(pts: np.ndarray, order: np.ndarray, neighbor_k: int, neighbors) -> np.ndarray:
    from .search import two_opt

    local = TspInstance(pts, name="sub")
    return two_opt(Tour(order), local, neighbor_k=neighbor_k, neighbors=neighbors).order


def nn_2opt_solve(
    sub,
    inst: TspInstance,
    restarts: int,
    rand: np.random.Generator,
    neighbor_k: int = 10,
) -> SubTour:
    """Best of `restarts` runs of NN construction plus 2-opt local search."""
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")
    pts = inst.points[sub.nodes]
    m = len(pts)
    if m > DENSE_MATRIX_MAX:
        from .search import knn_lists

        nbrs = knn_lists(TspInstance(pts, name="sub"), neighbor_k)
        best = None
        best_len = np.inf
        for _ in range(restarts):
            start = int(rand.integers(m))
            order = _improve_sparse(pts, _nn_tour_points(pts, start), neighbor_k, nbrs)
            d = pts[order] - pts[np.roll(order, -1)]
            length = float(np.sqrt((d * d).sum(axis=1)).sum())
            if length < best_len - 1e-15:
                best, best_len = order, length
        return SubTour(best)
    dist = _pairwise(pts)
    best = None
    best_len = np.inf
    for _ in range(restarts):
        start = int(rand.integers(m))
        order = _two_opt_dense(dist, _nn_tour(dist, start))
        length = _tour_len(dist, order)
        if length < best_len - 1e-15:
            best, best_len = order, length
    return SubTour(best)


def ensemble_heatmap_solve(
    sub,
    inst: TspInstance,
    runs: int,
    rand: np.random.Generator,
    neighbor_k: int = 10,
) -> SubHeatmap:
    """Edge frequencies over `runs` NN+2-opt tours from distinct starts.

    Each tour contributes two incident edges per node, so every node's
    incident frequency mass sums to exactly 2.
    """
    if runs < 1:
        raise ConfigError(f"ensemble runs must be >= 1, got {runs}")
    pts = inst.points[sub.nodes]
    m = len(pts)
    sparse = m > DENSE_MATRIX_MAX
    if sparse:
        from .search import knn_lists

        nbrs = knn_lists(TspInstance(pts, name="sub"), neighbor_k)
        dist = None
    else:
        dist = _pairwise(pts)
    starts = rand.permutation(m)
    counts: dict[tuple[int, int], int] = {}
    for r in range(runs):
        if sparse:
            order = _improve_sparse(pts, _nn_tour_points(pts, int(starts[r % m])), neighbor_k, nbrs)
        else:
            order = _two_opt_dense(dist, _nn_tour(dist, int(starts[r % m])))
        for k in range(m):
            a = int(order[k])
            b = int(order[(k + 1) % m])
            key = (a, b) if a < b else (b, a)
            counts[key] = counts.get(key, 0) + 1
    entries = {key: c / runs for key, c in counts.items()}
    return SubHeatmap(m, entries)


def solve_subgraph(spec: SolverSpec, sub, inst: TspInstance, rand: np.random.Generator) -> SubResult:
    """Run the configured sub-solver on one subgraph."""
    spec.validate()
    if spec.kind == "exact":
        if sub.size > HELD_KARP_MAX:
            raise SizeError(
                f"exact solver handles subgraphs of size <= {HELD_KARP_MAX}, got {sub.size}"
            )
        local = TspInstance(inst.points[sub.nodes], name=f"{inst.name}/sub")
        return SubTour(held_karp_exact(local).order)
    if spec.kind == "nn2opt":
        return nn_2opt_solve(sub, inst, spec.restarts, rand, neighbor_k=spec.neighbor_k)
    return ensemble_heatmap_solve(sub, inst, spec.ensemble_runs, rand, neighbor_k=spec.neighbor_k)

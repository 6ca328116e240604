"""Tour construction and improvement guided by an edge heatmap.

Decoders turn a heatmap into a tour (greedy argmax or probabilistic
sampling), two_opt polishes tours with candidate-list 2-exchanges, and
MctsState runs a sampled 2-exchange search whose edge weights blend
learned improvement estimates with heatmap-guided exploration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .instance import Tour, TspInstance, tour_length
from .merge import Heatmap, edge_key

DECODERS = ("greedy", "sample", "s2opt", "mcts")

# Moves must improve by more than this to be applied; keeps cycling
# impossible on coordinates with ~1e-16 relative noise.
_IMPROVE_EPS = 1e-12


@dataclass
class SearchParams:
    """Decode-stage knobs."""

    decoder: str = "s2opt"
    samples: int = 16
    neighbor_k: int = 10
    temperature: float = 1.0
    epsilon: float | None = None
    time_budget_ms: float | None = None
    iterations: int | None = None
    stagnation: int | None = None

    def validate(self):
        if self.decoder not in DECODERS:
            raise ConfigError(f"search.decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.samples < 1:
            raise ConfigError(f"search.samples must be >= 1, got {self.samples}")
        if self.neighbor_k < 1:
            raise ConfigError(f"search.neighbor_k must be >= 1, got {self.neighbor_k}")
        if self.temperature < 0:
            raise ConfigError(f"search.temperature must be >= 0, got {self.temperature}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigError(f"search.epsilon must be >= 0, got {self.epsilon}")
        if self.time_budget_ms is not None and self.time_budget_ms < 0:
            raise ConfigError("search.time_budget_ms must be >= 0")
        if self.iterations is not None and self.iterations < 0:
            raise ConfigError("search.iterations must be >= 0")
        if self.stagnation is not None and self.stagnation < 1:
            raise ConfigError("search.stagnation must be >= 1")


@dataclass
class SearchBudget:
    """Stop condition for the Monte Carlo search; at least one bound is required."""

    time_ms: float | None = None
    iterations: int | None = None

    def validate(self):
        if self.time_ms is None and self.iterations is None:
            raise ConfigError("search budget needs a time or iteration bound")
        if self.time_ms is not None and self.time_ms < 0:
            raise DomainError(f"time budget must be >= 0, got {self.time_ms}")
        if self.iterations is not None and self.iterations < 0:
            raise DomainError(f"iteration budget must be >= 0, got {self.iterations}")


def knn_lists(inst: TspInstance, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k-nearest-neighbor ids and distances per node, nearest first."""
    from scipy.spatial import cKDTree

    n = inst.n
    k = min(int(k), n - 1)
    if k < 1:
        raise DomainError(f"neighbor count must be >= 1, got {k}")
    dist, idx = cKDTree(inst.points).query(inst.points, k=k + 1)
    return idx[:, 1:].astype(np.int64), dist[:, 1:]


def _heatmap_rows(heatmap: Heatmap, n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-node (neighbor ids, probabilities), ids ascending."""
    buckets: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), p in heatmap.entries.items():
        buckets[i].append((j, p))
        buckets[j].append((i, p))
    rows = []
    for entries in buckets:
        entries.sort()
        if entries:
            ids = np.array([e[0] for e in entries], dtype=np.int64)
            ps = np.array([e[1] for e in entries], dtype=np.float64)
        else:
            ids = np.empty(0, dtype=np.int64)
            ps = np.empty(0, dtype=np.float64)
        rows.append((ids, ps))
    return rows


def _cycle_length(order: np.ndarray, pts: np.ndarray) -> float:
    p = pts[order]
    d = p - np.roll(p, -1, axis=0)
    return float(np.sqrt((d * d).sum(axis=1)).sum())


def greedy_decode(heatmap: Heatmap, inst: TspInstance) -> Tour:
    """Follow the highest-probability unvisited edge from node 0 onward.

    When no unvisited neighbor carries positive probability, the nearest
    unvisited node is taken instead; ties resolve to the smallest index.
    """
    n = inst.n
    if heatmap.n != n:
        raise DimensionError(f"heatmap over {heatmap.n} nodes, instance has {n}")
    rows = _heatmap_rows(heatmap, n)
    xs = inst.points[:, 0]
    ys = inst.points[:, 1]
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    order[0] = 0
    visited[0] = True
    cur = 0
    for k in range(1, n):
        ids, ps = rows[cur]
        nxt = -1
        if len(ids):
            masked = np.where(visited[ids], 0.0, ps)
            best = int(np.argmax(masked))
            if masked[best] > 0.0:
                nxt = int(ids[best])
        if nxt < 0:
            d = np.hypot(xs - xs[cur], ys - ys[cur])
            d[visited] = np.inf
            nxt = int(np.argmin(d))
        order[k] = nxt
        visited[nxt] = True
        cur = nxt
    return Tour(order)


def sample_decode(
    heatmap: Heatmap,
    inst: TspInstance,
    rand: np.random.Generator,
    epsilon: float | None = None,
) -> Tour:
    """Sequentially sample a tour with step weights (P_ij + epsilon).

    epsilon defaults to 1e-6 times the heatmap's maximum entry. With an
    empty heatmap and no explicit epsilon, steps fall back to a softmax
    over distances (temperature 0.1). The start node is drawn uniformly.
    """
    n = inst.n
    if heatmap.n != n:
        raise DimensionError(f"heatmap over {heatmap.n} nodes, instance has {n}")
    if epsilon is not None and epsilon < 0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    softmax_mode = False
    if epsilon is None:
        top = heatmap.max_value()
        if top > 0.0:
            epsilon = 1e-6 * top
        else:
            softmax_mode = True
    rows = _heatmap_rows(heatmap, n)
    xs = inst.points[:, 0]
    ys = inst.points[:, 1]
    visited = np.zeros(n, dtype=bool)
    # Swap-pop pool of unvisited nodes for O(1) uniform picks.
    pool = np.arange(n, dtype=np.int64)
    slot = np.arange(n, dtype=np.int64)
    count = n

    def take(node: int):
        nonlocal count
        i = slot[node]
        last = pool[count - 1]
        pool[i] = last
        slot[last] = i
        slot[node] = -1
        count -= 1

    order = np.empty(n, dtype=np.int64)
    cur = int(rand.integers(n))
    order[0] = cur
    visited[cur] = True
    take(cur)
    for k in range(1, n):
        if softmax_mode:
            live = pool[:count]
            w = np.exp(-np.hypot(xs[live] - xs[cur], ys[live] - ys[cur]) / 0.1)
            total = float(w.sum())
            r = rand.random() * total
            nxt = int(live[min(int(np.searchsorted(np.cumsum(w), r, side="right")), count - 1)])
        else:
            ids, ps = rows[cur]
            if len(ids):
                open_mask = ~visited[ids]
                hp = ps[open_mask]
                hsum = float(hp.sum())
            else:
                hp = None
                hsum = 0.0
            total = hsum + epsilon * count
            if total <= 0.0:
                d = np.hypot(xs - xs[cur], ys - ys[cur])
                d[visited] = np.inf
                nxt = int(np.argmin(d))
            else:
                r = rand.random() * total
                if r < hsum:
                    pick = int(np.searchsorted(np.cumsum(hp), r, side="right"))
                    nxt = int(ids[open_mask][min(pick, len(hp) - 1)])
                else:
                    nxt = int(pool[min(int((r - hsum) / epsilon), count - 1)])
        order[k] = nxt
        visited[nxt] = True
        take(nxt)
        cur = nxt
    return Tour(order)


def _reverse_segment(order: np.ndarray, pos: np.ndarray, i: int, j: int):
    """Reverse the cyclic position range [i, j]; wraps reverse the complement."""
    n = len(order)
    if i > j:
        i, j = (j + 1) % n, (i - 1) % n
        if i > j:
            return  # complement empty: whole-cycle reversal, same cyclic tour
    seg = order[i : j + 1][::-1].copy()
    order[i : j + 1] = seg
    pos[seg] = np.arange(i, j + 1)


def two_opt(
    tour: Tour,
    inst: TspInstance,
    neighbor_k: int = 10,
    max_sweeps: int | None = None,
    neighbors: tuple[np.ndarray, np.ndarray] | None = None,
) -> Tour:
    """First-improvement 2-opt restricted to k-nearest candidate edges.

    Sweeps use don't-look bits for speed; a final sweep over every node
    confirms quiescence, so with unrestricted candidates (neighbor_k >=
    n - 1) the result is 2-opt optimal outright.
    """
    n = inst.n
    tour.validate_for(n)
    order = tour.order.copy()
    if n < 4:
        return Tour(order)
    if neighbors is None:
        neighbors = knn_lists(inst, neighbor_k)
    nb_idx, nb_d = neighbors
    xs = inst.points[:, 0]
    ys = inst.points[:, 1]
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    active = np.ones(n, dtype=bool)
    verified = False
    sweeps = 0
    while max_sweeps is None or sweeps < max_sweeps:
        sweeps += 1
        improved_any = False
        for a in range(n):
            if not active[a]:
                continue
            pa = int(pos[a])
            b = int(order[(pa + 1) % n])
            ap = int(order[pa - 1])
            d_ab = math.hypot(xs[a] - xs[b], ys[a] - ys[b])
            d_pa = math.hypot(xs[ap] - xs[a], ys[ap] - ys[a])
            cd = nb_d[a]
            klim = int(np.searchsorted(cd, max(d_ab, d_pa)))
            if klim == 0:
                active[a] = False
                continue
            cand = nb_idx[a][:klim]
            cdist = cd[:klim]
            cpos = pos[cand]
            cnext = order[(cpos + 1) % n]
            cprev = order[cpos - 1]
            # Successor side: drop (a,b) and (c,succ c), add (a,c) and (b,succ c).
            d1 = (
                cdist
                + np.hypot(xs[b] - xs[cnext], ys[b] - ys[cnext])
                - d_ab
                - np.hypot(xs[cand] - xs[cnext], ys[cand] - ys[cnext])
            )
            d1[(cdist >= d_ab) | (cand == b) | (cnext == a)] = np.inf
            # Predecessor side: drop (pred a,a) and (pred c,c), add (pred a,pred c) and (a,c).
            d2 = (
                cdist
                + np.hypot(xs[ap] - xs[cprev], ys[ap] - ys[cprev])
                - d_pa
                - np.hypot(xs[cprev] - xs[cand], ys[cprev] - ys[cand])
            )
            d2[(cdist >= d_pa) | (cand == ap) | (cprev == a)] = np.inf
            both = np.minimum(d1, d2)
            hits = np.flatnonzero(both < -_IMPROVE_EPS)
            if len(hits) == 0:
                active[a] = False
                continue
            h = int(hits[0])
            c = int(cand[h])
            if d1[h] <= d2[h]:
                touched = (a, b, c, int(cnext[h]))
                _reverse_segment(order, pos, (pa + 1) % n, int(pos[c]))
            else:
                touched = (ap, a, int(cprev[h]), c)
                _reverse_segment(order, pos, pa, int(pos[c]) - 1 if int(pos[c]) else n - 1)
            for t in touched:
                active[t] = True
            improved_any = True
        if improved_any:
            verified = False
            continue
        if verified:
            break
        active[:] = True
        verified = True
    return Tour(order)


def s2opt_decode(
    heatmap: Heatmap,
    inst: TspInstance,
    samples: int,
    rand: np.random.Generator,
    neighbor_k: int = 10,
    neighbors: tuple[np.ndarray, np.ndarray] | None = None,
    epsilon: float | None = None,
) -> Tour:
    """Best of `samples` sampled tours, each polished by two_opt."""
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if neighbors is None:
        neighbors = knn_lists(inst, neighbor_k)
    best = None
    best_len = np.inf
    for _ in range(samples):
        t = sample_decode(heatmap, inst, rand, epsilon=epsilon)
        t = two_opt(t, inst, neighbor_k=neighbor_k, neighbors=neighbors)
        length = tour_length(t, inst)
        if length < best_len - 1e-15:
            best, best_len = t, length
    return best


class MctsState:
    """Sampled 2-exchange search over a fixed candidate edge set.

    Candidates per node are the union of heatmap support, k-nearest
    neighbors, and (optionally) triangulation edges, symmetrized. Each
    step samples an anchor node uniformly and a partner edge with weight
    Q + temperature * P * sqrt(ln(total+1)/(visits+1)), applies the
    2-exchange if it shortens the current tour, and always records the
    realized improvement in the edge statistics. After `stagnation`
    consecutive non-improving steps the current tour restarts from a
    fresh heatmap-guided sample.
    """

    def __init__(
        self,
        heatmap: Heatmap,
        inst: TspInstance,
        start: Tour,
        rand: np.random.Generator,
        temperature: float = 1.0,
        neighbor_k: int = 10,
        neighbors: tuple[np.ndarray, np.ndarray] | None = None,
        dt=None,
        stagnation: int | None = None,
        epsilon: float | None = None,
    ):
        n = inst.n
        if heatmap.n != n:
            raise DimensionError(f"heatmap over {heatmap.n} nodes, instance has {n}")
        start.validate_for(n)
        if dt is not None and dt.n != n:
            raise DimensionError(f"triangulation over {dt.n} nodes, instance has {n}")
        self.inst = inst
        self.heatmap = heatmap
        self.rand = rand
        self.temperature = float(temperature)
        self.stagnation_limit = int(stagnation) if stagnation is not None else n
        self.epsilon = epsilon

        if neighbors is None:
            neighbors = knn_lists(inst, neighbor_k)
        edges: set[tuple[int, int]] = set(heatmap.entries)
        nb_idx = neighbors[0]
        for a in range(n):
            for b in nb_idx[a]:
                edges.add(edge_key(a, int(b)))
        if dt is not None:
            edges |= dt.adjacency
        per_node: list[list[int]] = [[] for _ in range(n)]
        for i, j in edges:
            per_node[i].append(j)
            per_node[j].append(i)
        self.cand: list[np.ndarray] = []
        self.cand_p: list[np.ndarray] = []
        self.slot: list[dict[int, int]] = []
        for a in range(n):
            ids = np.array(sorted(per_node[a]), dtype=np.int64)
            self.cand.append(ids)
            self.cand_p.append(np.array([heatmap.get(a, int(b)) for b in ids]))
            self.slot.append({int(b): k for k, b in enumerate(ids)})
        self.q = [np.zeros(len(c)) for c in self.cand]
        self.visits = [np.zeros(len(c), dtype=np.int64) for c in self.cand]
        self.total_visits = 0

        self.xs = inst.points[:, 0].tolist()
        self.ys = inst.points[:, 1].tolist()
        self.current = start.order.copy()
        self.pos = np.empty(n, dtype=np.int64)
        self.pos[self.current] = np.arange(n)
        self.current_len = _cycle_length(self.current, inst.points)
        self.best = self.current.copy()
        self.best_len = self.current_len
        self.iterations = 0
        self.restarts = 0

    def _dist(self, i: int, j: int) -> float:
        return math.hypot(self.xs[i] - self.xs[j], self.ys[i] - self.ys[j])

    def _record(self, i: int, j: int, improvement: float):
        si = self.slot[i].get(j)
        if si is not None:
            v = self.visits[i]
            q = self.q[i]
            v[si] += 1
            q[si] += (improvement - q[si]) / v[si]
        sj = self.slot[j].get(i)
        if sj is not None:
            v = self.visits[j]
            q = self.q[j]
            v[sj] += 1
            q[sj] += (improvement - q[sj]) / v[sj]

    def edge_stats(self) -> dict[tuple[int, int], tuple[float, int]]:
        """Canonical edge -> (average improvement, visits) for visited edges."""
        out: dict[tuple[int, int], tuple[float, int]] = {}
        for a, ids in enumerate(self.cand):
            for k, b in enumerate(ids):
                if self.visits[a][k] > 0:
                    key = edge_key(a, int(b))
                    if key not in out:
                        out[key] = (float(self.q[a][k]), int(self.visits[a][k]))
        return out

    def step(self) -> bool:
        """One sampled 2-exchange; returns True if the current tour improved."""
        n = len(self.current)
        self.iterations += 1
        self.total_visits += 1
        a = int(self.rand.integers(n))
        cand = self.cand[a]
        if len(cand) == 0:
            return False
        b = int(self.current[(self.pos[a] + 1) % n])
        explore = math.sqrt(math.log(self.total_visits + 1.0))
        w = self.q[a] + self.temperature * self.cand_p[a] * (
            explore / np.sqrt(self.visits[a] + 1.0)
        )
        w = np.clip(w, 0.0, None) + 1e-9
        w[cand == b] = 0.0
        total = float(w.sum())
        if total <= 0.0:
            return False
        r = self.rand.random() * total
        c = int(cand[min(int(np.searchsorted(np.cumsum(w), r, side="right")), len(cand) - 1)])
        d = int(self.current[(self.pos[c] + 1) % n])
        if d == a or c == a:
            return False
        delta = (
            self._dist(a, c)
            + self._dist(b, d)
            - self._dist(a, b)
            - self._dist(c, d)
        )
        improvement = -delta
        self._record(a, c, improvement)
        self._record(b, d, improvement)
        if delta < -_IMPROVE_EPS:
            _reverse_segment(self.current, self.pos, (int(self.pos[a]) + 1) % n, int(self.pos[c]))
            self.current_len += delta
            if self.current_len < self.best_len - _IMPROVE_EPS:
                self.best = self.current.copy()
                self.best_len = self.current_len
            return True
        return False

    def restart(self):
        """Replace the current tour with a fresh heatmap-guided sample."""
        t = sample_decode(self.heatmap, self.inst, self.rand, epsilon=self.epsilon)
        self.current = t.order.copy()
        self.pos[self.current] = np.arange(len(self.current))
        self.current_len = _cycle_length(self.current, self.inst.points)
        self.restarts += 1
        if self.current_len < self.best_len - _IMPROVE_EPS:
            self.best = self.current.copy()
            self.best_len = self.current_len

    def run(self, budget: SearchBudget) -> Tour:
        budget.validate()
        deadline = None
        if budget.time_ms is not None:
            deadline = time.monotonic() + budget.time_ms / 1000.0
        stale = 0
        done = 0
        while True:
            if budget.iterations is not None and done >= budget.iterations:
                break
            if deadline is not None and time.monotonic() >= deadline:
                break
            improved = self.step()
            done += 1
            if improved:
                stale = 0
            else:
                stale += 1
                if stale >= self.stagnation_limit:
                    self.restart()
                    stale = 0
        return Tour(self.best.copy())


def mcts_search(
    heatmap: Heatmap,
    inst: TspInstance,
    start: Tour,
    budget: SearchBudget,
    rand: np.random.Generator,
    temperature: float = 1.0,
    neighbor_k: int = 10,
    neighbors: tuple[np.ndarray, np.ndarray] | None = None,
    dt=None,
    stagnation: int | None = None,
    epsilon: float | None = None,
) -> Tour:
    """Monte Carlo 2-exchange search from `start`; never returns a worse tour."""
    state = MctsState(
        heatmap,
        inst,
        start,
        rand,
        temperature=temperature,
        neighbor_k=neighbor_k,
        neighbors=neighbors,
        dt=dt,
        stagnation=stagnation,
        epsilon=epsilon,
    )
    return state.run(budget)

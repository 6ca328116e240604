"""Heatmap warm-up by trial edge deletion.

Repeatedly deletes the highest-fitness edge (probability times length),
re-decodes, and feeds the length difference back into the heatmap:
improving deletions stick and move the baseline, the rest are restored.
Every touched edge is marked tried so the loop terminates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError, InternalError
from .instance import Tour, TspInstance, tour_length
from .merge import Heatmap
from .search import knn_lists, s2opt_decode

DENOMINATORS = ("del", "baseline")


@dataclass
class WarmupParams:
    """Warm-up knobs; budget None means min(n, 200)."""

    enabled: bool = True
    beta: float = 0.1
    budget: int | None = None
    samples: int = 16
    denominator: str = "del"
    strict_improving: bool = False
    flip_alpha: bool = False
    time_budget_ms: float | None = None

    def validate(self):
        if self.beta <= 0:
            raise ConfigError(f"warmup.beta must be > 0, got {self.beta}")
        if self.budget is not None and self.budget < 0:
            raise ConfigError(f"warmup.budget must be >= 0, got {self.budget}")
        if self.samples < 1:
            raise ConfigError(f"warmup.samples must be >= 1, got {self.samples}")
        if self.denominator not in DENOMINATORS:
            raise ConfigError(
                f"warmup.denominator must be one of {DENOMINATORS}, got {self.denominator!r}"
            )
        if self.time_budget_ms is not None and self.time_budget_ms < 0:
            raise ConfigError("warmup.time_budget_ms must be >= 0")

    def resolve_budget(self, n: int) -> int:
        return min(n, 200) if self.budget is None else self.budget


@dataclass
class WarmupState:
    """Working heatmap plus the trajectory that produced it.

    `baseline` is the best tour seen by the inner decoder (None when the
    loop never ran), `start` the first decode before any deletion, and
    `history` one record per iteration with the trial outcome.
    """

    heatmap: Heatmap
    baseline: Tour | None = None
    start: Tour | None = None
    tried: set[tuple[int, int]] = field(default_factory=set)
    iteration: int = 0
    history: list[dict] = field(default_factory=list)
    beta: float = 0.1
    budget: int = 0
    samples: int = 16


def fitness_argmax(
    heatmap: Heatmap, inst: TspInstance, tried: set[tuple[int, int]]
) -> tuple[int, int] | None:
    """Untried support edge maximizing probability times length.

    Ties go to the lexicographically smallest edge; None when every
    support edge has been tried already.
    """
    xs = inst.points[:, 0]
    ys = inst.points[:, 1]
    best_edge = None
    best_fit = -math.inf
    for (i, j), p in heatmap.entries.items():
        if (i, j) in tried:
            continue
        fit = p * math.hypot(xs[i] - xs[j], ys[i] - ys[j])
        if fit > best_fit or (fit == best_fit and (i, j) < best_edge):
            best_fit = fit
            best_edge = (i, j)
    return best_edge


def _improvement_delta(beta: float, base_len: float, trial_len: float, denom_len: float) -> float:
    """Signed probability shift for one deletion trial."""
    if denom_len <= 0:
        raise DomainError(f"tour length must be positive, got {denom_len}")
    return beta * (math.exp((base_len - trial_len) / denom_len) - 1.0)


def backprop_update(
    heatmap: Heatmap,
    baseline: Tour,
    trial: Tour,
    beta: float,
    inst: TspInstance,
    denominator: str = "del",
    flip_alpha: bool = False,
) -> Heatmap:
    """Shift probabilities of edges where the two tours disagree.

    Edges in both tours are left untouched (checked before anything
    else); edges only in the baseline move by +delta, edges only in the
    trial tour by -delta, clamped to [0,1]. flip_alpha swaps the signs.
    Mutates and returns `heatmap`.
    """
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if denominator not in DENOMINATORS:
        raise ConfigError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    baseline.validate_for(inst.n)
    trial.validate_for(inst.n)
    base_len = tour_length(baseline, inst)
    trial_len = tour_length(trial, inst)
    if base_len <= 0 or trial_len <= 0:
        raise DomainError("tour lengths must be positive")
    denom_len = trial_len if denominator == "del" else base_len
    delta = _improvement_delta(beta, base_len, trial_len, denom_len)
    if delta == 0.0:
        return heatmap
    base_edges = set(baseline.edges())
    trial_edges = set(trial.edges())
    for e in base_edges | trial_edges:
        if e in base_edges and e in trial_edges:
            continue
        alpha = 1.0 if e in base_edges else -1.0
        if flip_alpha:
            alpha = -alpha
        heatmap.set(*e, min(1.0, max(0.0, heatmap.get(*e) + alpha * delta)))
    return heatmap


def warm_up(
    heatmap: Heatmap,
    inst: TspInstance,
    params: WarmupParams,
    rand,
    neighbors=None,
    neighbor_k: int = 10,
    check_invariants: bool = False,
) -> WarmupState:
    """Run the deletion-trial loop and return the refined heatmap state.

    Each iteration: pick the untried edge with the largest fitness, zero
    it, re-decode with the sampling+2-opt evaluator, back-propagate the
    length difference, then either keep the deletion (baseline improved)
    or restore the saved value. check_invariants re-verifies after every
    update that off-tour entries are bit-identical and all values stay
    in [0,1], raising InternalError otherwise.
    """
    params.validate()
    n = inst.n
    work = heatmap.copy()
    budget = params.resolve_budget(n)
    state = WarmupState(
        heatmap=work,
        beta=params.beta,
        budget=budget,
        samples=params.samples,
    )
    if not params.enabled or budget == 0 or work.support_size() == 0:
        return state
    if neighbors is None:
        neighbors = knn_lists(inst, neighbor_k)
    deadline = None
    if params.time_budget_ms is not None:
        deadline = time.monotonic() + params.time_budget_ms / 1000.0

    base = s2opt_decode(work, inst, params.samples, rand, neighbors=neighbors)
    base_len = tour_length(base, inst)
    state.start = base
    state.baseline = base

    for it in range(budget):
        if deadline is not None and time.monotonic() >= deadline:
            break
        edge = fitness_argmax(work, inst, state.tried)
        if edge is None:
            break
        state.iteration = it + 1
        saved = work.get(*edge)
        work.set(*edge, 0.0)
        trial = s2opt_decode(work, inst, params.samples, rand, neighbors=neighbors)
        trial_len = tour_length(trial, inst)
        improving = trial_len < base_len - 1e-12
        if improving or not params.strict_improving:
            if check_invariants:
                onto = set(base.edges()) | set(trial.edges())
                before = {e: p for e, p in work.entries.items() if e not in onto}
            backprop_update(
                work, base, trial, params.beta, inst, params.denominator, params.flip_alpha
            )
            if check_invariants:
                after = {e: p for e, p in work.entries.items() if e not in onto}
                if before != after:
                    raise InternalError("warm-up touched an edge outside both tours")
                if any(not 0.0 <= p <= 1.0 for p in work.entries.values()):
                    raise InternalError("warm-up pushed a probability outside [0,1]")
        if improving:
            work.set(*edge, 0.0)
            base = trial
            base_len = trial_len
            state.baseline = trial
        else:
            work.set(*edge, saved)
        state.tried.add(edge)
        state.history.append(
            {
                "edge": edge,
                "kept": improving,
                "baseline_length": base_len,
                "trial_length": trial_len,
            }
        )
    return state

"""End-to-end runner: triangulate, sample, solve, merge, warm up, decode.

Holds the flat key=value configuration surface and the per-run report.
Runs are deterministic for a fixed (instance, seed) at any thread count:
subgraph solvers draw from per-index rng streams and results are
collected in subgraph order, never completion order.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConfigError
from .geometry import delaunay_triangulate
from .instance import Tour, TspInstance, tour_length
from .merge import Heatmap, apply_dt_filter, merge_one_stage, merge_two_stage
from .sampling import ANCHOR_MODES, SamplingParams, extract_subgraphs
from .search import (
    SearchBudget,
    SearchParams,
    greedy_decode,
    knn_lists,
    mcts_search,
    s2opt_decode,
    sample_decode,
)
from .subsolver import HELD_KARP_MAX, SolverSpec, solve_subgraph
from .warmup import WarmupParams, warm_up

# Wall-clock budget used when the mcts decoder is selected without any
# explicit time or iteration bound.
DEFAULT_MCTS_TIME_MS = 1000.0


@dataclass
class PipelineConfig:
    """Everything a run needs besides the instance itself."""

    seed: int = 0
    threads: int = 1
    sampling: SamplingParams = field(default_factory=SamplingParams)
    solver: SolverSpec = field(default_factory=SolverSpec)
    warmup: WarmupParams = field(default_factory=WarmupParams)
    search: SearchParams = field(default_factory=SearchParams)

    def validate(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.sampling.m is not None and self.sampling.m < 2:
            raise ConfigError(f"sampling.m must be >= 2, got {self.sampling.m}")
        if self.sampling.min_cover < 1:
            raise ConfigError(f"sampling.min_cover must be >= 1, got {self.sampling.min_cover}")
        if self.sampling.max_subgraphs is not None and self.sampling.max_subgraphs < 1:
            raise ConfigError(
                f"sampling.max_subgraphs must be >= 1, got {self.sampling.max_subgraphs}"
            )
        if self.sampling.anchor not in ANCHOR_MODES:
            raise ConfigError(
                f"sampling.anchor must be one of {ANCHOR_MODES}, got {self.sampling.anchor!r}"
            )
        self.solver.validate()
        self.warmup.validate()
        self.search.validate()
        if (
            self.solver.kind == "exact"
            and self.sampling.m is not None
            and self.sampling.m > HELD_KARP_MAX
        ):
            raise ConfigError(
                f"exact solver handles subgraphs up to {HELD_KARP_MAX} nodes, "
                f"sampling.m is {self.sampling.m}"
            )

    @classmethod
    def from_text(cls, text: str) -> "PipelineConfig":
        return config_from_text(text)

    def to_text(self) -> str:
        return config_to_text(self)


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _opt(parser):
    def parse(raw: str):
        if raw.lower() in ("none", ""):
            return None
        return parser(raw)

    return parse


# key -> (config attribute path, parser)
_CONFIG_KEYS: dict[str, tuple[tuple[str, ...], object]] = {
    "seed": (("seed",), int),
    "threads": (("threads",), int),
    "sampling.m": (("sampling", "m"), _opt(int)),
    "sampling.min_cover": (("sampling", "min_cover"), int),
    "sampling.max_subgraphs": (("sampling", "max_subgraphs"), _opt(int)),
    "sampling.anchor": (("sampling", "anchor"), str),
    "solver.kind": (("solver", "kind"), str),
    "solver.restarts": (("solver", "restarts"), int),
    "solver.ensemble_R": (("solver", "ensemble_runs"), int),
    "solver.neighbor_k": (("solver", "neighbor_k"), int),
    "warmup.enabled": (("warmup", "enabled"), _parse_bool),
    "warmup.beta": (("warmup", "beta"), float),
    "warmup.budget": (("warmup", "budget"), _opt(int)),
    "warmup.samples": (("warmup", "samples"), int),
    "warmup.denominator": (("warmup", "denominator"), str),
    "warmup.strict_improving": (("warmup", "strict_improving"), _parse_bool),
    "search.decoder": (("search", "decoder"), str),
    "search.samples": (("search", "samples"), int),
    "search.time_budget_ms": (("search", "time_budget_ms"), _opt(float)),
    "search.neighbor_k": (("search", "neighbor_k"), int),
    "search.temperature": (("search", "temperature"), float),
}


def config_from_text(text: str) -> PipelineConfig:
    """Parse a flat key=value config; unknown keys and bad values are errors."""
    cfg = PipelineConfig()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {line_no}: unknown config key {key!r}")
        path, parser = _CONFIG_KEYS[key]
        try:
            parsed = parser(value)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"line {line_no}: bad value for {key}: {e}") from e
        target = cfg
        for attr in path[:-1]:
            target = getattr(target, attr)
        setattr(target, path[-1], parsed)
    cfg.validate()
    return cfg


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_text(cfg: PipelineConfig) -> str:
    """Emit every config key in canonical order; round-trips from_text."""
    lines = []
    for key, (path, _) in _CONFIG_KEYS.items():
        target = cfg
        for attr in path:
            target = getattr(target, attr)
        lines.append(f"{key} = {_format_value(target)}")
    return "\n".join(lines) + "\n"


@dataclass
class RunReport:
    """Everything observable about one pipeline run."""

    tour: Tour
    length: float
    length_rescaled: float
    stage_seconds: dict[str, float]
    subgraph_count: int
    coverage_min: int
    coverage_max: int
    coverage_mean: float
    fallback_count: int
    support_pre_filter: int
    support_post_filter: int
    support_post_warmup: int
    warmup_iterations: int
    warmup_start_length: float | None
    warmup_baseline_length: float | None
    seed: int
    threads: int
    solver_kind: str
    decoder: str
    instance_name: str
    n: int
    normalization: dict
    heatmaps: dict[str, Heatmap] | None = None

    def to_json(self) -> str:
        payload = {
            "instance": self.instance_name,
            "n": self.n,
            "tour": [int(v) for v in self.tour.order],
            "length": self.length,
            "length_rescaled": self.length_rescaled,
            "stage_seconds": {k: round(v, 6) for k, v in self.stage_seconds.items()},
            "subgraph_count": self.subgraph_count,
            "coverage": {
                "min": self.coverage_min,
                "max": self.coverage_max,
                "mean": self.coverage_mean,
            },
            "fallback_count": self.fallback_count,
            "heatmap_support": {
                "pre_filter": self.support_pre_filter,
                "post_filter": self.support_post_filter,
                "post_warmup": self.support_post_warmup,
            },
            "warmup": {
                "iterations": self.warmup_iterations,
                "start_length": self.warmup_start_length,
                "baseline_length": self.warmup_baseline_length,
            },
            "seed": self.seed,
            "threads": self.threads,
            "solver_kind": self.solver_kind,
            "decoder": self.decoder,
            "normalization": self.normalization,
        }
        return json.dumps(payload, indent=2)


@contextmanager
def _stage(name: str, times: dict[str, float]):
    start = time.perf_counter()
    try:
        yield
    except Exception as e:
        first = e.args[0] if e.args else str(e)
        e.args = (f"[stage:{name}] {first}",) + tuple(e.args[1:])
        raise
    finally:
        times[name] = times.get(name, 0.0) + time.perf_counter() - start


def run(inst: TspInstance, cfg: PipelineConfig, keep_heatmaps: bool = False) -> RunReport:
    """Run the full pipeline on one instance."""
    cfg.validate()
    n = inst.n
    m_resolved = cfg.sampling.resolve(n)[0]
    if cfg.solver.kind == "exact" and m_resolved > HELD_KARP_MAX:
        raise ConfigError(
            f"exact solver handles subgraphs up to {HELD_KARP_MAX} nodes, "
            f"resolved sampling.m is {m_resolved}"
        )
    times: dict[str, float] = {}

    with _stage("triangulate", times):
        dt = delaunay_triangulate(inst.points)

    with _stage("sample", times):
        subs = extract_subgraphs(dt, inst, cfg.sampling)
        coverage = np.zeros(n, dtype=np.int64)
        for sub in subs:
            coverage[sub.nodes] += 1

    with _stage("solve", times):
        streams = [rng.stream(cfg.seed, rng.SUBSOLVER, i) for i in range(len(subs))]
        if cfg.threads == 1 or len(subs) < 2:
            results = [
                solve_subgraph(cfg.solver, sub, inst, st) for sub, st in zip(subs, streams)
            ]
        else:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(
                    pool.map(
                        lambda pair: solve_subgraph(cfg.solver, pair[0], inst, pair[1]),
                        zip(subs, streams),
                    )
                )

    with _stage("merge", times):
        pairs = list(zip(subs, results))
        if cfg.solver.kind == "ensemble":
            merged = merge_two_stage(pairs, n)
        else:
            merged = merge_one_stage(pairs, n)
        filtered = apply_dt_filter(merged, dt)

    with _stage("warmup", times):
        neighbors = knn_lists(inst, cfg.search.neighbor_k)
        wstate = warm_up(
            filtered,
            inst,
            cfg.warmup,
            rng.stream(cfg.seed, rng.WARMUP),
            neighbors=neighbors,
            neighbor_k=cfg.search.neighbor_k,
        )
        warmed = wstate.heatmap

    with _stage("decode", times):
        sp = cfg.search
        drand = rng.stream(cfg.seed, rng.DECODER)
        if sp.decoder == "greedy":
            tour = greedy_decode(warmed, inst)
        elif sp.decoder == "sample":
            tour = sample_decode(warmed, inst, drand, epsilon=sp.epsilon)
        elif sp.decoder == "s2opt":
            tour = s2opt_decode(
                warmed, inst, sp.samples, drand,
                neighbor_k=sp.neighbor_k, neighbors=neighbors, epsilon=sp.epsilon,
            )
        else:
            start = s2opt_decode(
                warmed, inst, sp.samples, drand,
                neighbor_k=sp.neighbor_k, neighbors=neighbors, epsilon=sp.epsilon,
            )
            time_ms = sp.time_budget_ms
            if time_ms is None and sp.iterations is None:
                time_ms = DEFAULT_MCTS_TIME_MS
            tour = mcts_search(
                warmed,
                inst,
                start,
                SearchBudget(time_ms=time_ms, iterations=sp.iterations),
                rng.stream(cfg.seed, rng.MCTS),
                temperature=sp.temperature,
                neighbor_k=sp.neighbor_k,
                neighbors=neighbors,
                dt=dt,
                stagnation=sp.stagnation,
                epsilon=sp.epsilon,
            )
        # The warm-up baseline is itself a full decode of the evolving
        # heatmap; never report a tour worse than it.
        if wstate.baseline is not None and tour_length(wstate.baseline, inst) < tour_length(
            tour, inst
        ):
            tour = wstate.baseline

    length = tour_length(tour, inst)
    report = RunReport(
        tour=tour,
        length=length,
        length_rescaled=inst.norm.rescale_length(length),
        stage_seconds=times,
        subgraph_count=len(subs),
        coverage_min=int(coverage.min()),
        coverage_max=int(coverage.max()),
        coverage_mean=float(coverage.mean()),
        fallback_count=sum(1 for s in subs if s.used_fallback),
        support_pre_filter=merged.support_size(),
        support_post_filter=filtered.support_size(),
        support_post_warmup=warmed.support_size(),
        warmup_iterations=wstate.iteration,
        warmup_start_length=(
            tour_length(wstate.start, inst) if wstate.start is not None else None
        ),
        warmup_baseline_length=(
            tour_length(wstate.baseline, inst) if wstate.baseline is not None else None
        ),
        seed=cfg.seed,
        threads=cfg.threads,
        solver_kind=cfg.solver.kind,
        decoder=cfg.search.decoder,
        instance_name=inst.name,
        n=n,
        normalization=inst.norm.to_dict(),
        heatmaps={"merged": merged, "filtered": filtered, "warmed": warmed}
        if keep_heatmaps
        else None,
    )
    return report

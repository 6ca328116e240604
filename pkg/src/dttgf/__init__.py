"""Delaunay-decomposed TSP solving with heatmap fusion and guided search."""

from .errors import (
    ConfigError,
    DegenerateTriangleError,
    DimensionError,
    DomainError,
    DttgfError,
    DuplicatePointsError,
    InputError,
    InternalError,
    MalformedTourError,
    ParseError,
    SizeError,
    UnsupportedFormatError,
)
from .geometry import DelaunayGraph, InCircle, delaunay_triangulate, in_circumcircle
from .instance import (
    Normalization,
    Tour,
    TspInstance,
    drop_percent,
    gen_uniform,
    load_instance,
    parse_tour,
    parse_tsplib,
    tour_length,
    write_tour,
    write_tsplib,
)
from .merge import Heatmap, SelectionCounter, apply_dt_filter, merge_one_stage, merge_two_stage
from .pipeline import PipelineConfig, RunReport, run
from .sampling import CoverageCounter, SamplingParams, SubGraph, extract_subgraphs
from .search import (
    MctsState,
    SearchBudget,
    SearchParams,
    greedy_decode,
    mcts_search,
    s2opt_decode,
    sample_decode,
    two_opt,
)
from .subsolver import (
    SolverSpec,
    SubHeatmap,
    SubResult,
    SubTour,
    ensemble_heatmap_solve,
    held_karp_exact,
    nn_2opt_solve,
    solve_subgraph,
)
from .warmup import WarmupParams, WarmupState, backprop_update, fitness_argmax, warm_up

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CoverageCounter",
    "DegenerateTriangleError",
    "DelaunayGraph",
    "DimensionError",
    "DomainError",
    "DttgfError",
    "DuplicatePointsError",
    "Heatmap",
    "InCircle",
    "InputError",
    "InternalError",
    "MalformedTourError",
    "MctsState",
    "Normalization",
    "ParseError",
    "PipelineConfig",
    "RunReport",
    "SamplingParams",
    "SearchBudget",
    "SearchParams",
    "SelectionCounter",
    "SizeError",
    "SolverSpec",
    "SubGraph",
    "SubHeatmap",
    "SubResult",
    "SubTour",
    "Tour",
    "TspInstance",
    "UnsupportedFormatError",
    "WarmupParams",
    "WarmupState",
    "apply_dt_filter",
    "backprop_update",
    "delaunay_triangulate",
    "drop_percent",
    "ensemble_heatmap_solve",
    "extract_subgraphs",
    "fitness_argmax",
    "gen_uniform",
    "greedy_decode",
    "held_karp_exact",
    "in_circumcircle",
    "load_instance",
    "mcts_search",
    "merge_one_stage",
    "merge_two_stage",
    "nn_2opt_solve",
    "parse_tour",
    "parse_tsplib",
    "run",
    "s2opt_decode",
    "sample_decode",
    "solve_subgraph",
    "tour_length",
    "two_opt",
    "warm_up",
    "write_tour",
    "write_tsplib",
    "__version__",
]

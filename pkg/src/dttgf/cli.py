"""Command line front end.

Subcommands: gen (write a random instance), solve (run the pipeline),
eval (score a tour file against an instance and optional reference), and
bench (solve a directory of instances and emit CSV). Exit codes: 0 on
success, 2 for configuration errors, 3 for input-data errors, 4 for
internal invariant violations or unexpected failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .errors import ConfigError, DttgfError, InputError, InternalError
from .instance import (
    drop_percent,
    gen_uniform,
    load_instance,
    parse_tour,
    tour_length,
    write_heatmap,
    write_tour,
    write_tsplib,
)
from .pipeline import PipelineConfig, run

STAGES = ("triangulate", "sample", "solve", "merge", "warmup", "decode")


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return PipelineConfig.from_text(text)


def _cmd_gen(args) -> int:
    inst = gen_uniform(args.n, args.seed)
    Path(args.out).write_text(write_tsplib(inst))
    print(f"wrote {args.out} (n={inst.n}, seed={args.seed})")
    return 0


def _cmd_solve(args) -> int:
    inst = load_instance(args.input)
    cfg = _load_config(args.config)
    report = run(inst, cfg, keep_heatmaps=args.dump_heatmap is not None)
    if args.out_tour:
        Path(args.out_tour).write_text(write_tour(report.tour))
    if args.report:
        Path(args.report).write_text(report.to_json() + "\n")
    if args.dump_heatmap:
        prefix = args.dump_heatmap
        Path(f"{prefix}.pre").write_text(write_heatmap(report.heatmaps["merged"]))
        Path(f"{prefix}.filtered").write_text(write_heatmap(report.heatmaps["filtered"]))
        Path(f"{prefix}.warm").write_text(write_heatmap(report.heatmaps["warmed"]))
    total = sum(report.stage_seconds.values())
    print(
        f"{report.instance_name}: n={report.n} length={report.length:.6f} "
        f"rescaled={report.length_rescaled:.6f} subgraphs={report.subgraph_count} "
        f"time={total:.2f}s"
    )
    return 0


def _parse_reference(raw: str, inst) -> float:
    """A reference is either a tour file or a literal length (original units)."""
    path = Path(raw)
    if path.exists():
        ref_tour = parse_tour(path.read_text())
        ref_tour.validate_for(inst.n)
        return inst.norm.rescale_length(tour_length(ref_tour, inst))
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"reference {raw!r} is neither a tour file nor a length") from None


def _cmd_eval(args) -> int:
    inst = load_instance(args.instance)
    tour = parse_tour(Path(args.tour).read_text())
    tour.validate_for(inst.n)
    length = tour_length(tour, inst)
    rescaled = inst.norm.rescale_length(length)
    line = f"length={length:.6f} rescaled={rescaled:.6f}"
    if args.reference is not None:
        ref = _parse_reference(args.reference, inst)
        line += f" reference={ref:.6f} drop={drop_percent(rescaled, ref):.4f}%"
    print(line)
    return 0


def _cmd_bench(args) -> int:
    suite = Path(args.suite)
    if not suite.is_dir():
        raise InputError(f"suite directory not found: {suite}")
    paths = sorted(p for p in suite.iterdir() if p.suffix in (".tsp", ".json"))
    if not paths:
        raise InputError(f"no .tsp or .json instances under {suite}")
    cfg = _load_config(args.config)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["instance", "n", "length", "drop"] + [f"{s}_s" for s in STAGES])
        for path in paths:
            inst = load_instance(str(path))
            report = run(inst, cfg)
            drop = ""
            ref = _find_reference(path, inst)
            if ref is not None:
                drop = f"{drop_percent(report.length_rescaled, ref):.4f}"
            writer.writerow(
                [path.name, report.n, f"{report.length_rescaled:.6f}", drop]
                + [f"{report.stage_seconds.get(s, 0.0):.3f}" for s in STAGES]
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _find_reference(path: Path, inst) -> float | None:
    """Look for <stem>.opt.tour (a tour file) or <stem>.ref (a length)."""
    tour_path = path.with_name(path.stem + ".opt.tour")
    if tour_path.exists():
        ref_tour = parse_tour(tour_path.read_text())
        ref_tour.validate_for(inst.n)
        return inst.norm.rescale_length(tour_length(ref_tour, inst))
    ref_path = path.with_name(path.stem + ".ref")
    if ref_path.exists():
        try:
            return float(ref_path.read_text().strip())
        except ValueError as e:
            raise InputError(f"bad reference length in {ref_path}: {e}") from e
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dttgf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a uniform random instance")
    p_gen.add_argument("--n", type=int, required=True, help="number of nodes")
    p_gen.add_argument("--seed", type=int, default=0, help="generator seed")
    p_gen.add_argument("--out", required=True, help="output instance path (.tsp)")
    p_gen.set_defaults(func=_cmd_gen)

    p_solve = sub.add_parser("solve", help="run the pipeline on one instance")
    p_solve.add_argument("--in", dest="input", required=True, help="instance (.tsp or .json)")
    p_solve.add_argument("--config", help="flat key=value config file")
    p_solve.add_argument("--out-tour", help="write the tour, one index per line")
    p_solve.add_argument("--report", help="write the run report as JSON")
    p_solve.add_argument(
        "--dump-heatmap",
        metavar="PREFIX",
        help="write PREFIX.pre, PREFIX.filtered, PREFIX.warm heatmap dumps",
    )
    p_solve.set_defaults(func=_cmd_solve)

    p_eval = sub.add_parser("eval", help="score a tour file")
    p_eval.add_argument("--tour", required=True, help="tour file to score")
    p_eval.add_argument("--instance", required=True, help="instance the tour belongs to")
    p_eval.add_argument(
        "--reference",
        help="reference tour file or length (original units) for the drop metric",
    )
    p_eval.set_defaults(func=_cmd_eval)

    p_bench = sub.add_parser("bench", help="solve every instance in a directory")
    p_bench.add_argument("--suite", required=True, help="directory of .tsp/.json instances")
    p_bench.add_argument("--config", help="flat key=value config file")
    p_bench.add_argument("--out", help="CSV output path (default stdout)")
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except InternalError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 4
    except (InputError, DttgfError, OSError, ValueError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # anything else is a bug, not bad input
        print(f"unexpected error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

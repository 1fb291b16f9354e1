"""Command-line surface: generate | validate | solve | experiment | stats |
export-geojson.

Every subcommand prints its effective configuration (including the resolved
seed) before doing any work, so any run can be reproduced from its header.
Output files are byte-reproducible for a fixed seed; wall-clock measurements
are confined to stdout summaries, timing.json, tables.txt and the time
columns of runs.csv.

Exit codes: 0 ok (warnings allowed), 1 validation found violations, 2 bad
input/output, 3 generation infeasibility, 4 infeasible construction while
solving, 5 every experiment cell failed.

Set RVRP_LOG=debug|info|quiet to control verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import generator, stats
from .evaluation import check_feasible
from .export import solution_feature_collection
from .instance import Instance, Solution, decode, encode, validate_instance
from .operators import InfeasibleClusterError
from .solvers import ALGORITHMS, SolverConfig, solve

log = logging.getLogger("rvrp")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_GENERATION = 3
EXIT_CONSTRUCTION = 4
EXIT_ALL_FAILED = 5


def _setup_logging() -> None:
    level = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}.get(
        os.environ.get("RVRP_LOG", "").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int.from_bytes(os.urandom(4), "big")


def _print_header(command: str, **params) -> None:
    print(f"# rvrp {command}")
    for key, value in params.items():
        print(f"#   {key} = {value}")


def _write_json(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


def _load_instance(path: str) -> Instance:
    try:
        return Instance.load(path)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CommandError(EXIT_IO, f"cannot read instance {path}: {exc}")


# ---------------------------------------------------------------- subcommands


def cmd_generate(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    only = args.only or None
    _print_header("generate", seed=seed, out=args.out, only=only or "all")
    try:
        instances = generator.generate_suite(seed, only=only)
        manifest = generator.write_suite(instances, args.out, seed)
    except generator.GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except OSError as exc:
        print(f"cannot write suite: {exc}", file=sys.stderr)
        return EXIT_IO
    rows = [["Instance", "Nodes", "Clusters", "Capacity", "Forbidden/cluster"]]
    for inst in instances:
        per_cluster = len(inst.forbidden) // len(inst.clusters)
        rows.append(
            [inst.name, str(inst.n_customers), str(len(inst.clusters)), str(inst.capacity), str(per_cluster)]
        )
    print(stats.align_table(rows), end="")
    print(f"wrote {len(instances)} instance file(s) + {manifest}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    _print_header("validate", instance=args.instance)
    inst = _load_instance(args.instance)
    report = validate_instance(inst)
    if report.ok:
        print(f"{inst.name}: ok")
        return EXIT_OK
    for issue in report.violations:
        print(f"{inst.name}: violation {issue.name}: {issue.detail}")
    return EXIT_INVALID


def cmd_solve(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    inst = _load_instance(args.instance)
    report = validate_instance(inst)
    if not report.ok:
        print(f"invalid instance {inst.name}: {report.names}", file=sys.stderr)
        return EXIT_IO
    cfg = SolverConfig(
        algorithm=args.algorithm,
        seed=seed,
        population_size=args.population,
        enable_cluster_relocation=args.enable_cluster_relocation,
    )
    out_path = Path(args.out) if args.out else Path(args.instance).with_suffix(f".{args.algorithm}.solution.json")
    _print_header(
        "solve",
        instance=args.instance,
        algorithm=args.algorithm,
        seed=seed,
        population=args.population,
        enable_cluster_relocation=args.enable_cluster_relocation,
        out=out_path,
    )
    try:
        result = solve(inst, cfg)
    except InfeasibleClusterError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    data = result.to_dict(include_history=args.emit_history)
    data["instance"] = inst.name
    data["encoding"] = encode(result.best_solution)
    try:
        _write_json(out_path, data)
    except OSError as exc:
        print(f"cannot write solution: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"{inst.name} {args.algorithm} {result.best_cost:.2f} {result.best_solution.vehicles} "
        f"{result.wall_time_s:.3f} {result.convergence_time_s:.3f} {seed}"
    )
    return EXIT_OK


def _load_solution(path: str, inst: Instance) -> Solution:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return decode([int(v) for v in data["encoding"]], inst)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CommandError(EXIT_IO, f"cannot read solution {path}: {exc}")


def cmd_experiment(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    for alg in algorithms:
        if alg not in ALGORITHMS:
            print(f"unknown algorithm {alg!r}", file=sys.stderr)
            return EXIT_IO
    out_dir = Path(args.out)
    _print_header(
        "experiment",
        suite=args.suite,
        algorithms=",".join(algorithms),
        runs=args.runs,
        seed=seed,
        jobs=args.jobs,
        population=args.population,
        out=out_dir,
    )
    try:
        instances = generator.load_suite(args.suite)
    except (OSError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot load suite: {exc}", file=sys.stderr)
        return EXIT_IO
    overrides: dict = {}
    if args.population:
        overrides["population_size"] = args.population
    if args.enable_cluster_relocation:
        overrides["enable_cluster_relocation"] = True
    report = stats.run_experiment(
        instances,
        algorithms=algorithms,
        runs_per_cell=args.runs,
        base_seed=seed,
        jobs=args.jobs,
        config_overrides=overrides,
    )
    failures = sum(len(cell.errors) for cell in report.cells.values())
    successes = sum(len(cell.costs) for cell in report.cells.values())
    for (name, alg), cell in sorted(report.cells.items()):
        for err in cell.errors:
            log.warning("cell %s/%s: %s", name, alg, err)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "report.json", report.to_dict())
    _write_json(out_dir / "timing.json", report.timing_dict())
    (out_dir / "runs.csv").write_text(report.csv_text(), encoding="utf-8")
    tables = (
        stats.render_results_table(report)
        + "\n"
        + stats.render_best_table(report)
        + "\n"
        + stats.render_stats_tables(report)
    )
    (out_dir / "tables.txt").write_text(tables, encoding="utf-8")
    print(tables, end="")
    print(f"recorded {successes} run(s), {failures} failure(s) -> {out_dir}")
    if successes == 0:
        return EXIT_ALL_FAILED
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    _print_header("stats", runs=args.runs_csv)
    try:
        with open(args.runs_csv, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        print(f"cannot read {args.runs_csv}: {exc}", file=sys.stderr)
        return EXIT_IO
    if not rows:
        print("no runs in CSV", file=sys.stderr)
        return EXIT_IO
    instances = list(dict.fromkeys(r["instance"] for r in rows))
    algorithms = list(dict.fromkeys(r["algorithm"] for r in rows))
    costs: dict[tuple[str, str], list[float]] = {}
    for r in rows:
        costs.setdefault((r["instance"], r["algorithm"]), []).append(float(r["cost"]))
    complete = [
        name for name in instances if all(costs.get((name, alg)) for alg in algorithms)
    ]
    table = [["Instance"] + [f"{alg}:avg" for alg in algorithms] + [f"{alg}:sd" for alg in algorithms]]
    for name in instances:
        row = [name]
        cell_stats = [
            stats.mean_sd(costs[(name, alg)]) if (name, alg) in costs else (float("nan"), float("nan"))
            for alg in algorithms
        ]
        row += [f"{m:.1f}" for m, _ in cell_stats] + [f"{s:.1f}" for _, s in cell_stats]
        table.append(row)
    print(stats.align_table(table), end="")
    if len(algorithms) >= 2 and len(complete) >= 2:
        matrix = [[stats.mean_sd(costs[(name, alg)])[0] for alg in algorithms] for name in complete]
        fried = stats.friedman(matrix)
        control = min(range(len(algorithms)), key=fried.average_ranks.__getitem__)
        holm_result = stats.holm(fried.average_ranks, len(complete), control, labels=algorithms)
        print()
        for alg, rank in zip(algorithms, fried.average_ranks):
            print(f"{alg}: average rank {rank:.4f}")
        print(
            f"Friedman statistic {fried.statistic:.4f} (df={fried.dof}, p={fried.p_value:.6g})"
        )
        print(f"Holm post-hoc, control {algorithms[control]}:")
        for c in holm_result.comparisons:
            print(
                f"  {c.label}: z={c.z:.4f} p={c.p_unadjusted:.6f} "
                f"adjusted={c.p_adjusted:.6f} reject@0.05={c.reject_at_05}"
            )
        if args.out:
            _write_json(
                Path(args.out),
                {
                    "average_ranks": dict(zip(algorithms, fried.average_ranks)),
                    "friedman": {
                        "statistic": fried.statistic,
                        "dof": fried.dof,
                        "p_value": fried.p_value,
                    },
                    "holm": {
                        "control": algorithms[control],
                        "comparisons": [
                            {
                                "algorithm": c.label,
                                "z": c.z,
                                "p_unadjusted": c.p_unadjusted,
                                "p_adjusted": c.p_adjusted,
                                "reject_at_0.05": c.reject_at_05,
                            }
                            for c in holm_result.comparisons
                        ],
                    },
                },
            )
    else:
        print("\nNo statistical tests (need at least two algorithms and two instances).")
    return EXIT_OK


def cmd_export_geojson(args: argparse.Namespace) -> int:
    _print_header("export-geojson", instance=args.instance, solution=args.solution, out=args.out)
    inst = _load_instance(args.instance)
    sol = _load_solution(args.solution, inst)
    try:
        collection = solution_feature_collection(inst, sol)
    except ValueError as exc:
        print(f"solution/instance mismatch: {exc}", file=sys.stderr)
        return EXIT_IO
    feasibility = check_feasible(sol, inst)
    if not feasibility.feasible:
        log.warning("exported solution is infeasible: %s", feasibility.violation_tags)
    try:
        _write_json(Path(args.out), collection)
    except OSError as exc:
        print(f"cannot write geojson: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvrp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="regenerate the 15-instance benchmark suite")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="benchmark")
    p.add_argument("--only", action="append", metavar="NAME")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check an instance file's invariants")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("instance")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="dfa")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--enable-cluster-relocation", action="store_true")
    p.add_argument("--emit-history", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run the instances x algorithms x runs grid")
    p.add_argument("--suite", default="benchmark")
    p.add_argument("--algorithms", default="dfa,ea,esa")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--enable-cluster-relocation", action="store_true")
    p.add_argument("--out", default="experiment")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("stats", help="recompute aggregates and tests from a runs.csv")
    p.add_argument("runs_csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-geojson", help="render an instance + solution as GeoJSON")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_geojson)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(exc.message, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

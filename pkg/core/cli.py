"""
mabcs Command Line
==================

Subcommands:
    analyze    <instance> [--alpha X] [--json]
    bounds     <instance> [--alpha X] --horizon T [--delta D] [-o bounds.csv]
    simulate   <config.json> [--workers N]
    ingest     <ratings.csv> <genres.csv> --scale-max 5 --cost-seed S -o <instance> [--alpha X]
    aggregate  <dir>
    compare    <dir> --a ALGO --b ALGO --alpha X

Arms are numbered from 1 in every table and file. Failures print one JSON
error line to stderr and exit with status 1.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from rich import box
from rich.console import Console
from rich.table import Table

from core.aggregate import aggregate, compare_terminal
from core.bounds import bound_report, log_horizon
from core.config import Settings, load_experiment_config
from core.errors import MabcsError, TraceIOError
from core.instance import BanditInstance, analyze, format_instance, parse_instance
from core.policy import Algorithm
from core.ratings import ingest_ratings
from core.runner import run_sweep
from core.structured_logging import setup_structured_logging

console = Console()


def _fmt(value, digits: int = 6) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def _load_instance(path: str, alpha: Optional[float]) -> BanditInstance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise TraceIOError(path, f"cannot read instance: {e}")
    instance = parse_instance(text)
    return instance.with_alpha(alpha) if alpha is not None else instance


def cmd_analyze(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance, args.alpha)
    result = analyze(instance)

    if args.json:
        print(json.dumps(result.to_dict(), indent=2))
        return 0

    table = Table(title=f"Instance (K={result.num_arms}, alpha={result.alpha})", box=box.ROUNDED)
    for column in ("arm", "label", "mean", "cost", "class", "quality gap", "cost gap"):
        table.add_column(column, justify="right" if column not in ("label", "class") else "left")
    for k in range(result.num_arms):
        table.add_row(
            str(k + 1),
            instance.label(k),
            _fmt(instance.means[k]),
            _fmt(instance.costs[k]),
            result.arm_class(k),
            _fmt(result.quality_gaps[k]),
            _fmt(result.cost_gaps[k]),
        )
    console.print(table)

    summary = result.to_dict()
    for key in ("mu_star", "i_star", "mu_cs", "a_star", "a_dagger", "mu_dagger", "A_dagger_set"):
        console.print(f"[bold]{key}[/bold] = {summary[key]}")
    return 0


def cmd_bounds(args: argparse.Namespace) -> int:
    instance = _load_instance(args.instance, args.alpha)
    log_horizon(args.horizon)
    delta = args.delta if args.delta is not None else 1.0 / args.horizon ** 2
    report = bound_report(analyze(instance), args.horizon, delta)
    frame = pd.DataFrame(report.rows(), columns=[*report.ARM_COLUMNS, *report.SUMMARY_COLUMNS])

    if args.output is None:
        frame.to_csv(sys.stdout, index=False)
        return 0

    try:
        frame.to_csv(args.output, index=False)
    except OSError as e:
        raise TraceIOError(str(args.output), f"cannot write: {e}")

    table = Table(
        title=f"Gaussian-form LB and COF bounds (T={args.horizon}, delta={delta:.3g})",
        box=box.ROUNDED,
    )
    for column in report.ARM_COLUMNS:
        table.add_column(column, justify="right")
    for row in report.rows()[:-1]:
        table.add_row(*(_fmt(row[c]) for c in report.ARM_COLUMNS))
    console.print(table)
    console.print(
        f"tau_dagger = {_fmt(report.tau_dagger)}  A_used = {_fmt(report.A_used)}  "
        f"cost_ub = {_fmt(report.cost_regret_ub)}  quality_ub = {_fmt(report.quality_regret_ub)}"
    )
    console.print(f"[dim]Wrote {args.output}[/dim]")
    return 0


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    config = load_experiment_config(Path(args.config))
    if args.workers is not None:
        config = config.model_copy(update={"workers": args.workers})
    result = run_sweep(config, settings)

    terminal = pd.read_csv(result.written["terminal"])
    means = terminal.groupby(["algorithm", "alpha"], sort=True)[
        ["cost_regret", "quality_regret", "total_regret"]
    ].mean().reset_index()

    table = Table(title=f"Mean terminal regret (T={config.horizon}, runs={config.num_runs})", box=box.ROUNDED)
    for column in ("algorithm", "alpha", "cost", "quality", "total"):
        table.add_column(column, justify="left" if column == "algorithm" else "right")
    for row in means.itertuples(index=False):
        table.add_row(row.algorithm, _fmt(row.alpha), _fmt(row.cost_regret),
                      _fmt(row.quality_regret), _fmt(row.total_regret))
    console.print(table)
    console.print(f"[dim]Results in {result.output_dir}[/dim]")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    arms = ingest_ratings(args.ratings, args.genres, args.scale_max, args.cost_seed)
    instance = arms.to_instance(args.alpha)
    try:
        Path(args.output).write_text(format_instance(instance), encoding="utf-8")
    except OSError as e:
        raise TraceIOError(str(args.output), f"cannot write: {e}")

    table = Table(title=f"Ingested arms (alpha={args.alpha})", box=box.ROUNDED)
    for column in ("arm", "genre", "mean", "cost", "ratings"):
        table.add_column(column, justify="left" if column == "genre" else "right")
    for k in range(arms.num_arms):
        table.add_row(str(k + 1), arms.genres[k], _fmt(arms.means[k]),
                      _fmt(arms.costs[k]), str(arms.rating_counts[k]))
    console.print(table)
    console.print(f"[dim]Wrote {args.output}[/dim]")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    written = aggregate(Path(args.directory))
    for name, path in written.items():
        console.print(f"{name}: {path}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    comparison = compare_terminal(
        Path(args.directory),
        Algorithm(args.a).value,
        Algorithm(args.b).value,
        args.alpha,
        confidence=args.confidence,
        n_resamples=args.resamples,
        seed=args.seed,
    )
    print(json.dumps(comparison.to_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mabcs",
        description="Multi-armed bandits with cost subsidy: COF, baselines, bounds and sweeps",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  mabcs analyze data/nu2.txt
  mabcs bounds data/nu2.txt --horizon 1000000
  mabcs simulate configs/ablation_combine.json --workers 8
  mabcs compare results/ablation_combine --a cof --b cof_no_combine --alpha 0.3
        """
    )
    parser.add_argument("--settings", type=Path, help="Settings YAML (default: .mabcs.yaml lookup)")
    parser.add_argument("--log-level", help="Override the logging level")
    parser.add_argument("--log-format", choices=["json", "dev"], help="Override the log format")

    sub = parser.add_subparsers(dest="command", required=True)
    algorithms = [a.value for a in Algorithm]

    p = sub.add_parser("analyze", help="Print every derived symbol of an instance")
    p.add_argument("instance")
    p.add_argument("--alpha", type=float, help="Replace the file's subsidy factor")
    p.add_argument("--json", action="store_true", help="Print JSON instead of tables")

    p = sub.add_parser("bounds", help="Theoretical bounds as CSV")
    p.add_argument("instance")
    p.add_argument("--alpha", type=float, help="Replace the file's subsidy factor")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--delta", type=float, help="Error tolerance (default 1/T^2)")
    p.add_argument("-o", "--output", type=Path, help="Write CSV here and print a table")

    p = sub.add_parser("simulate", help="Run an experiment config")
    p.add_argument("config")
    p.add_argument("--workers", type=int, help="Override the number of worker processes")

    p = sub.add_parser("ingest", help="Build an instance file from ratings")
    p.add_argument("ratings")
    p.add_argument("genres")
    p.add_argument("--scale-max", type=float, default=5.0)
    p.add_argument("--cost-seed", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("aggregate", help="Rebuild sweep tables from run files")
    p.add_argument("directory")

    p = sub.add_parser("compare", help="Bootstrap comparison of terminal regret")
    p.add_argument("directory")
    p.add_argument("--a", required=True, choices=algorithms)
    p.add_argument("--b", required=True, choices=algorithms)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--resamples", type=int, default=9999)
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        settings = Settings.load_from_file(args.settings) if args.settings else Settings.load_default()
        log_file = Path(settings.logging.log_file) if settings.logging.log_file else None
        setup_structured_logging(
            level=args.log_level or settings.logging.level,
            format_type=args.log_format or settings.logging.format,
            log_file=log_file,
        )

        if args.command == "simulate":
            return cmd_simulate(args, settings)
        handlers = {
            "analyze": cmd_analyze,
            "bounds": cmd_bounds,
            "ingest": cmd_ingest,
            "aggregate": cmd_aggregate,
            "compare": cmd_compare,
        }
        return handlers[args.command](args)
    except MabcsError as e:
        print(json.dumps(e.to_dict(), default=str), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

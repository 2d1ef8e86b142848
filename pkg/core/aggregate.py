"""
Sweep Aggregation
=================

Turns per-run curves and event logs into plot-ready tables:

- aggregate.csv: per (algorithm, alpha, t) the mean, p20, p50 and p80 of cost,
  quality and summed regret, in long form with a `stat` column
- terminal.csv: one row per run with its regrets at the horizon
- events_summary.csv: per (algorithm, alpha, arm, kind) the number of
  verdict events and the mean and standard deviation of their times

Percentiles interpolate linearly between order statistics. All runs
aggregated together must share one checkpoint grid.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from core.cof import EVENT_COLUMNS
from core.errors import CheckpointGridMismatchError, TraceFormatError, TraceIOError, ValidationError
from core.metrics import CURVE_COLUMNS
from core.structured_logging import PerformanceLogger

logger = logging.getLogger(__name__)

STATS = ("mean", "p20", "p50", "p80")
METRICS = ("cost_regret", "quality_regret", "total_regret")
AGGREGATE_COLUMNS = ["algorithm", "alpha", "t", "stat", *METRICS]
TERMINAL_COLUMNS = ["run_id", "algorithm", "alpha", "t", *METRICS]
EVENTS_SUMMARY_COLUMNS = ["algorithm", "alpha", "arm", "kind", "count", "mean_t", "std_t"]

Source = Union[str, Path, Sequence[Union[str, Path]]]


def _read_csvs(paths: Iterable[Path], columns: List[str], what: str) -> pd.DataFrame:
    frames = []
    for path in paths:
        try:
            frame = pd.read_csv(path)
        except pd.errors.EmptyDataError:
            raise TraceFormatError(str(path), "file is empty")
        except (OSError, pd.errors.ParserError) as e:
            raise TraceIOError(str(path), f"cannot read {what}: {e}")
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise TraceFormatError(str(path), f"missing columns {missing}")
        frames.append(frame[columns])
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)


def _curve_paths(source: Source) -> List[Path]:
    if isinstance(source, (str, Path)):
        root = Path(source)
        if root.is_file():
            return [root]
        curves = root / "curves"
        return sorted((curves if curves.is_dir() else root).glob("*.csv"))
    return [Path(p) for p in source]


def read_curves(source: Source) -> pd.DataFrame:
    """Curve rows from a sweep directory, a curves directory or explicit files."""
    paths = _curve_paths(source)
    if not paths:
        raise TraceFormatError(str(source), "no curve files found")
    return _read_csvs(paths, CURVE_COLUMNS, "curve")


def read_events(output_dir: Union[str, Path]) -> pd.DataFrame:
    events_dir = Path(output_dir) / "events"
    paths = sorted(events_dir.glob("*.csv")) if events_dir.is_dir() else []
    return _read_csvs(paths, EVENT_COLUMNS, "event log")


def check_grids(curves: pd.DataFrame) -> None:
    """Every run must report the same checkpoint times, each once."""
    reference: Optional[np.ndarray] = None
    for run_id, group in curves.groupby("run_id", sort=True):
        grid = group["t"].to_numpy()
        if len(np.unique(grid)) != len(grid):
            raise CheckpointGridMismatchError(str(run_id), "repeats checkpoint times; run ids must be unique")
        if reference is None:
            reference = grid
        elif not np.array_equal(grid, reference):
            raise CheckpointGridMismatchError(str(run_id))


def _with_total(curves: pd.DataFrame) -> pd.DataFrame:
    return curves.assign(total_regret=curves["cost_regret"] + curves["quality_regret"])


def aggregate_curves(curves: pd.DataFrame) -> pd.DataFrame:
    """Mean and 20/50/80th percentiles per (algorithm, alpha, t)."""
    check_grids(curves)
    curves = _with_total(curves)
    grouped = curves.groupby(["algorithm", "alpha", "t"], sort=True)[list(METRICS)]

    parts = {
        "mean": grouped.mean(),
        "p20": grouped.quantile(0.2, interpolation="linear"),
        "p50": grouped.quantile(0.5, interpolation="linear"),
        "p80": grouped.quantile(0.8, interpolation="linear"),
    }
    table = pd.concat(parts, names=["stat"]).reset_index()
    table["stat"] = pd.Categorical(table["stat"], categories=list(STATS), ordered=True)
    table = table.sort_values(["algorithm", "alpha", "t", "stat"], kind="mergesort")
    table["stat"] = table["stat"].astype(str)
    return table[AGGREGATE_COLUMNS].reset_index(drop=True)


def terminal_table(curves: pd.DataFrame) -> pd.DataFrame:
    """Each run's last checkpoint."""
    curves = _with_total(curves)
    last = curves.sort_values(["run_id", "t"], kind="mergesort").groupby("run_id", sort=True).tail(1)
    last = last.sort_values(["algorithm", "alpha", "run_id"], kind="mergesort")
    return last[TERMINAL_COLUMNS].reset_index(drop=True)


def summarize_events(events: pd.DataFrame, runs: pd.DataFrame) -> pd.DataFrame:
    """Verdict-event counts and time statistics; `runs` maps run_id to algorithm and alpha."""
    if events.empty:
        return pd.DataFrame(columns=EVENTS_SUMMARY_COLUMNS)
    labelled = events.merge(runs[["run_id", "algorithm", "alpha"]].drop_duplicates(), on="run_id")
    summary = (
        labelled.groupby(["algorithm", "alpha", "arm", "kind"], sort=True)["t"]
        .agg(count="count", mean_t="mean", std_t="std")
        .reset_index()
    )
    return summary[EVENTS_SUMMARY_COLUMNS]


def _write(frame: pd.DataFrame, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise TraceIOError(str(path), f"cannot write: {e}")
    return path


def write_tables(curves: pd.DataFrame, events: pd.DataFrame, output_dir: Path) -> Dict[str, Path]:
    output_dir = Path(output_dir)
    with PerformanceLogger("aggregate", {"rows": len(curves)}):
        aggregate = aggregate_curves(curves)
        terminal = terminal_table(curves)
        summary = summarize_events(events, terminal)
    written = {
        "aggregate": _write(aggregate, output_dir / "aggregate.csv"),
        "terminal": _write(terminal, output_dir / "terminal.csv"),
        "events_summary": _write(summary, output_dir / "events_summary.csv"),
    }
    logger.info("Wrote sweep tables", extra={"output_dir": str(output_dir), "runs": len(terminal)})
    return written


def write_sweep_tables(traces, output_dir: Path) -> Dict[str, Path]:
    """Sweep tables straight from in-memory run traces."""
    curves = pd.concat([trace.curve_frame() for trace in traces], ignore_index=True)
    event_frames = [trace.event_frame() for trace in traces if trace.events]
    events = (
        pd.concat(event_frames, ignore_index=True) if event_frames
        else pd.DataFrame(columns=EVENT_COLUMNS)
    )
    return write_tables(curves, events, output_dir)


def aggregate(source: Source, output_dir: Optional[Path] = None) -> Dict[str, Path]:
    """
    Rebuild the sweep tables from run files on disk.

    `source` is a sweep output directory (its curves/ and events/ are read)
    or a list of curve files. Tables go to `output_dir`, defaulting to the
    source directory.
    """
    curves = read_curves(source)
    if isinstance(source, (str, Path)) and Path(source).is_dir():
        root = Path(source)
        events = read_events(root)
    else:
        root = Path(output_dir) if output_dir is not None else Path(".")
        events = pd.DataFrame(columns=EVENT_COLUMNS)
    return write_tables(curves, events, Path(output_dir) if output_dir is not None else root)


@dataclass(frozen=True)
class Comparison:
    """Mean summed terminal regret of A minus that of B, with a bootstrap interval."""
    algorithm_a: str
    algorithm_b: str
    alpha: float
    n_a: int
    n_b: int
    mean_a: float
    mean_b: float
    difference: float
    ci_low: float
    ci_high: float
    confidence: float

    @property
    def excludes_zero(self) -> bool:
        return self.ci_high < 0.0 or self.ci_low > 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "algorithm_a": self.algorithm_a,
            "algorithm_b": self.algorithm_b,
            "alpha": self.alpha,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "difference": self.difference,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "confidence": self.confidence,
            "excludes_zero": self.excludes_zero,
        }


def _mean_difference(a, b, axis=-1):
    return np.mean(a, axis=axis) - np.mean(b, axis=axis)


def compare_terminal(
    source: Union[str, Path, pd.DataFrame],
    algorithm_a: str,
    algorithm_b: str,
    alpha: float,
    confidence: float = 0.95,
    n_resamples: int = 9999,
    seed: int = 0,
) -> Comparison:
    """
    Compare two algorithms' summed terminal regret at one alpha.

    `source` is a terminal table or a sweep directory (its terminal.csv, or
    its curves when terminal.csv is absent). The interval is a percentile
    bootstrap over independent resamples of each algorithm's runs.
    """
    if isinstance(source, pd.DataFrame):
        terminal = source
    else:
        path = Path(source) / "terminal.csv"
        terminal = (
            _read_csvs([path], TERMINAL_COLUMNS, "terminal table") if path.exists()
            else terminal_table(read_curves(source))
        )

    at_alpha = terminal[np.isclose(terminal["alpha"].astype(float), alpha)]
    a = at_alpha.loc[at_alpha["algorithm"] == algorithm_a, "total_regret"].to_numpy(dtype=float)
    b = at_alpha.loc[at_alpha["algorithm"] == algorithm_b, "total_regret"].to_numpy(dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValidationError(
            f"need at least two runs of each algorithm at alpha={alpha} "
            f"(got {a.size} of {algorithm_a}, {b.size} of {algorithm_b})",
            field="alpha"
        )

    result = stats.bootstrap(
        (a, b),
        _mean_difference,
        vectorized=True,
        paired=False,
        confidence_level=confidence,
        n_resamples=n_resamples,
        method="percentile",
        random_state=np.random.default_rng(seed),
    )
    return Comparison(
        algorithm_a=algorithm_a,
        algorithm_b=algorithm_b,
        alpha=alpha,
        n_a=int(a.size),
        n_b=int(b.size),
        mean_a=float(a.mean()),
        mean_b=float(b.mean()),
        difference=float(a.mean() - b.mean()),
        ci_low=float(result.confidence_interval.low),
        ci_high=float(result.confidence_interval.high),
        confidence=confidence,
    )

"""
Tests for sweep aggregation and terminal-regret comparison.
"""

import numpy as np
import pandas as pd
import pytest

from core.aggregate import (
    AGGREGATE_COLUMNS,
    EVENTS_SUMMARY_COLUMNS,
    TERMINAL_COLUMNS,
    aggregate,
    aggregate_curves,
    check_grids,
    compare_terminal,
    read_curves,
    summarize_events,
    terminal_table,
    write_sweep_tables,
)
from core.errors import CheckpointGridMismatchError, TraceFormatError, ValidationError
from core.metrics import CURVE_COLUMNS
from core.runner import simulate_run, write_run_files


def curve(run_id, costs, qualities, grid=(10, 100), algorithm="cof", alpha=0.3):
    """One run's curve rows."""
    return pd.DataFrame(
        [(run_id, algorithm, alpha, t, c, q) for t, c, q in zip(grid, costs, qualities)],
        columns=CURVE_COLUMNS,
    )


def terminal_rows(algorithm, totals, alpha=0.3):
    return pd.DataFrame(
        [(f"{algorithm}__r{i}", algorithm, alpha, 100, total, 0.0, total) for i, total in enumerate(totals)],
        columns=TERMINAL_COLUMNS,
    )


class TestAggregateCurves:
    """Test the per-checkpoint statistics table"""

    def test_single_run(self):
        """Every statistic of one run is the run itself"""
        table = aggregate_curves(curve("r0", [1.0, 2.0], [0.5, 0.25]))
        assert list(table.columns) == AGGREGATE_COLUMNS
        assert len(table) == 8
        assert list(table["stat"][:4]) == ["mean", "p20", "p50", "p80"]
        at_end = table[table["t"] == 100]
        assert (at_end["total_regret"] == 2.25).all()

    def test_two_runs_interpolate_linearly(self):
        """Terminal totals 0 and 10: mean 5, p20 2, p50 5, p80 8"""
        curves = pd.concat([
            curve("r0", [0.0, 0.0], [0.0, 0.0]),
            curve("r1", [1.0, 6.0], [1.0, 4.0]),
        ], ignore_index=True)
        table = aggregate_curves(curves)
        at_end = table[table["t"] == 100].set_index("stat")["total_regret"]
        assert at_end["mean"] == pytest.approx(5.0)
        assert at_end["p20"] == pytest.approx(2.0)
        assert at_end["p50"] == pytest.approx(5.0)
        assert at_end["p80"] == pytest.approx(8.0)

    def test_groups_by_algorithm_and_alpha(self):
        """Test one block of rows per (algorithm, alpha)"""
        curves = pd.concat([
            curve("a", [1.0, 1.0], [0.0, 0.0], algorithm="cof"),
            curve("b", [3.0, 3.0], [0.0, 0.0], algorithm="ucb_cs"),
            curve("c", [5.0, 5.0], [0.0, 0.0], algorithm="ucb_cs", alpha=0.5),
        ], ignore_index=True)
        table = aggregate_curves(curves)
        assert len(table) == 3 * 2 * 4
        means = table[(table["stat"] == "mean") & (table["t"] == 100)]
        assert list(zip(means["algorithm"], means["alpha"], means["cost_regret"])) == [
            ("cof", 0.3, 1.0), ("ucb_cs", 0.3, 3.0), ("ucb_cs", 0.5, 5.0),
        ]

    def test_grid_mismatch(self):
        """Runs on different checkpoint grids cannot be aggregated"""
        curves = pd.concat([
            curve("r0", [0.0, 0.0], [0.0, 0.0]),
            curve("r1", [0.0, 0.0, 0.0], [0.0, 0.0, 0.0], grid=(10, 50, 100)),
        ], ignore_index=True)
        with pytest.raises(CheckpointGridMismatchError) as exc_info:
            aggregate_curves(curves)
        assert exc_info.value.context["run_id"] == "r1"

    def test_matching_grids_pass(self):
        check_grids(pd.concat([curve("r0", [0, 0], [0, 0]), curve("r1", [1, 1], [1, 1])]))

    def test_duplicate_run_id_rejected(self):
        """Two runs sharing a run id look like one run with a repeated grid"""
        curves = pd.concat([
            curve("cof__a0.8000__r0000", [0.0, 1.0], [0.0, 1.0], grid=(50, 500)),
            curve("cof__a0.8000__r0000", [0.0, 2.0], [0.0, 2.0], grid=(50, 500)),
        ], ignore_index=True)
        with pytest.raises(CheckpointGridMismatchError) as exc_info:
            check_grids(curves)
        assert exc_info.value.context["run_id"] == "cof__a0.8000__r0000"
        assert "unique" in exc_info.value.context["reason"]

    def test_repeated_traces_not_pooled(self, nu1, tmp_path):
        """The same run twice in memory is refused instead of averaged"""
        trace = simulate_run(nu1, "ucb_cs", 500, seed=1, checkpoint_grid=[50, 500])
        with pytest.raises(CheckpointGridMismatchError):
            write_sweep_tables([trace, trace], tmp_path)


class TestTerminalAndEvents:
    """Test the terminal table and the event summary"""

    def test_terminal_table_takes_last_checkpoint(self):
        curves = pd.concat([
            curve("r1", [1.0, 6.0], [1.0, 4.0]),
            curve("r0", [0.0, 2.0], [0.0, 0.5]),
        ], ignore_index=True)
        terminal = terminal_table(curves)
        assert list(terminal.columns) == TERMINAL_COLUMNS
        assert list(terminal["run_id"]) == ["r0", "r1"]
        assert list(terminal["total_regret"]) == [2.5, 10.0]
        assert (terminal["t"] == 100).all()

    def test_events_summary(self):
        """Counts, mean and sample standard deviation of verdict times"""
        events = pd.DataFrame(
            [("r0", 10, 1, "deemed_infeasible"), ("r1", 20, 1, "deemed_infeasible"),
             ("r0", 30, 2, "deemed_feasible")],
            columns=["run_id", "t", "arm", "kind"],
        )
        runs = pd.DataFrame({"run_id": ["r0", "r1"], "algorithm": ["cof", "cof"], "alpha": [0.3, 0.3]})
        summary = summarize_events(events, runs)
        assert list(summary.columns) == EVENTS_SUMMARY_COLUMNS
        first = summary[summary["arm"] == 1].iloc[0]
        assert first["count"] == 2
        assert first["mean_t"] == pytest.approx(15.0)
        assert first["std_t"] == pytest.approx(np.sqrt(50.0))
        assert summary[summary["arm"] == 2].iloc[0]["count"] == 1

    def test_empty_events(self):
        runs = pd.DataFrame({"run_id": ["r0"], "algorithm": ["ucb_cs"], "alpha": [0.3]})
        empty = pd.DataFrame(columns=["run_id", "t", "arm", "kind"])
        assert summarize_events(empty, runs).empty


class TestReadingRunFiles:
    """Test rebuilding tables from files on disk"""

    def test_no_curve_files(self, tmp_path):
        with pytest.raises(TraceFormatError):
            read_curves(tmp_path)

    def test_missing_columns(self, tmp_path):
        """Test a curve file without the regret columns"""
        (tmp_path / "bad.csv").write_text("run_id,t\nr0,1\n", encoding="utf-8")
        with pytest.raises(TraceFormatError):
            read_curves([tmp_path / "bad.csv"])

    def test_rebuild_matches_in_memory_tables(self, nu1, tmp_path):
        """Tables rebuilt from run files equal the ones built during the sweep"""
        traces = [simulate_run(nu1, algorithm, 500, seed=s, checkpoint_grid=[50, 500], run_index=s)
                  for algorithm in ("cof", "ucb_cs") for s in (1, 2)]
        for trace in traces:
            write_run_files(trace, tmp_path / "sweep")
        live = write_sweep_tables(traces, tmp_path / "live")
        rebuilt = aggregate(tmp_path / "sweep")

        assert set(rebuilt) == {"aggregate", "terminal", "events_summary"}
        for name in ("aggregate", "terminal"):
            pd.testing.assert_frame_equal(pd.read_csv(rebuilt[name]), pd.read_csv(live[name]))
        assert len(pd.read_csv(rebuilt["terminal"])) == 4

    def test_output_dir_override(self, nu1, tmp_path):
        trace = simulate_run(nu1, "etc_cs", 200, seed=0, checkpoint_grid=[100, 200])
        write_run_files(trace, tmp_path / "sweep")
        written = aggregate(tmp_path / "sweep", output_dir=tmp_path / "tables")
        assert written["aggregate"] == tmp_path / "tables" / "aggregate.csv"
        assert written["aggregate"].exists()


class TestCompareTerminal:
    """Test the bootstrap comparison of terminal regret"""

    def test_clear_difference_excludes_zero(self):
        """Test well-separated samples"""
        terminal = pd.concat([
            terminal_rows("cof", [10.0, 12.0, 11.0, 9.0, 13.0]),
            terminal_rows("ucb_cs", [100.0, 104.0, 98.0, 101.0, 97.0]),
        ], ignore_index=True)
        result = compare_terminal(terminal, "cof", "ucb_cs", 0.3, n_resamples=999)
        assert result.n_a == result.n_b == 5
        assert result.difference == pytest.approx(11.0 - 100.0)
        assert result.ci_low <= result.difference <= result.ci_high
        assert result.ci_high < 0
        assert result.excludes_zero
        assert result.to_dict()["excludes_zero"] is True

    def test_overlapping_samples(self):
        """Identical samples give an interval around zero"""
        values = [1.0, 5.0, 3.0, 8.0, 2.0, 7.0]
        terminal = pd.concat([terminal_rows("cof", values), terminal_rows("ts_cs", values)],
                             ignore_index=True)
        result = compare_terminal(terminal, "cof", "ts_cs", 0.3, n_resamples=999)
        assert result.difference == 0.0
        assert result.ci_low < 0 < result.ci_high
        assert not result.excludes_zero

    def test_seeded(self):
        """Test the same seed reproduces the interval"""
        terminal = pd.concat([terminal_rows("cof", [1.0, 2.0, 4.0]), terminal_rows("ucb_cs", [3.0, 6.0, 5.0])],
                             ignore_index=True)
        first = compare_terminal(terminal, "cof", "ucb_cs", 0.3, n_resamples=499, seed=3)
        second = compare_terminal(terminal, "cof", "ucb_cs", 0.3, n_resamples=499, seed=3)
        assert (first.ci_low, first.ci_high) == (second.ci_low, second.ci_high)

    def test_needs_two_runs_each(self):
        """Test the minimum sample size"""
        terminal = pd.concat([terminal_rows("cof", [1.0]), terminal_rows("ucb_cs", [3.0, 4.0])],
                             ignore_index=True)
        with pytest.raises(ValidationError):
            compare_terminal(terminal, "cof", "ucb_cs", 0.3)

    def test_other_alpha_ignored(self):
        terminal = pd.concat([
            terminal_rows("cof", [1.0, 2.0]),
            terminal_rows("ucb_cs", [3.0, 4.0], alpha=0.5),
        ], ignore_index=True)
        with pytest.raises(ValidationError):
            compare_terminal(terminal, "cof", "ucb_cs", 0.3)

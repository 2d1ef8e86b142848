"""
Experiment Runner
=================

Seeded single runs and full sweeps (algorithms x alphas x runs).

Every run draws its seed from `derive_seed`, a BLAKE2b hash of
(master_seed, algorithm, alpha, run_index), so results never depend on
execution order or worker count. A run writes its own files:

    <output_dir>/curves/<run_id>.csv   run_id,algorithm,alpha,t,cost_regret,quality_regret
    <output_dir>/events/<run_id>.csv   run_id,t,arm,kind        (COF variants)
    <output_dir>/runs/<run_id>.json    seed, final counts, terminal regrets

After all runs finish, the sweep writes aggregate.csv, terminal.csv and
events_summary.csv through core.aggregate.
"""

import hashlib
import json
import logging
import time
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.aggregate import write_sweep_tables
from core.baselines import make_policy
from core.cof import EVENT_COLUMNS, DecisionObserver, EpisodeEvent, default_delta
from core.config import ExperimentConfig, Settings
from core.errors import InvalidConfigError, MabcsError, RunFailedError, TraceIOError, ValidationError
from core.instance import BanditInstance, analyze, parse_instance
from core.metrics import CURVE_COLUMNS, Checkpoint, RegretAccumulator, log_spaced_grid
from core.policy import Algorithm
from core.sampler import RewardEnvironment
from core.structured_logging import PerformanceLogger, log_context

logger = logging.getLogger(__name__)


def derive_seed(master_seed: int, algorithm: str, alpha: float, run_index: int) -> int:
    """
    Stable 64-bit seed for one run.

    BLAKE2b with an 8-byte digest over "master_seed|algorithm|repr(alpha)|run_index",
    read as a big-endian unsigned integer.
    """
    algorithm = Algorithm(algorithm).value
    key = f"{master_seed}|{algorithm}|{float(alpha)!r}|{run_index}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def make_run_id(algorithm: str, alpha: float, run_index: int) -> str:
    return f"{Algorithm(algorithm).value}__a{alpha:.4f}__r{run_index:04d}"


def policy_generator(seed: int, num_arms: int) -> np.random.Generator:
    """Generator for randomized policies, independent of every arm's reward stream."""
    # RewardEnvironment uses spawn keys 0..K-1 of the same root
    sequence = np.random.SeedSequence(seed, spawn_key=(num_arms,))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass
class RunTrace:
    """Everything one run produces; arm indices are 0-based."""
    run_id: str
    algorithm: str
    alpha: float
    seed: int
    horizon: int
    delta: float
    checkpoints: List[Checkpoint] = field(default_factory=list)
    count_history: List[List[int]] = field(default_factory=list)
    final_counts: List[int] = field(default_factory=list)
    events: List[EpisodeEvent] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def cost_regret(self) -> float:
        return self.checkpoints[-1][1] if self.checkpoints else 0.0

    @property
    def quality_regret(self) -> float:
        return self.checkpoints[-1][2] if self.checkpoints else 0.0

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                (self.run_id, self.algorithm, self.alpha, t, cost, quality)
                for t, cost, quality in self.checkpoints
            ],
            columns=CURVE_COLUMNS,
        )

    def event_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(self.run_id, e.time, e.arm + 1, e.kind.value) for e in self.events],
            columns=EVENT_COLUMNS,
        )

    def to_dict(self) -> Dict[str, object]:
        """Summary written to runs/<run_id>.json (1-based arms, no timings)."""
        return {
            "run_id": self.run_id,
            "algorithm": self.algorithm,
            "alpha": self.alpha,
            "seed": self.seed,
            "horizon": self.horizon,
            "delta": self.delta,
            "final_counts": list(self.final_counts),
            "cost_regret": self.cost_regret,
            "quality_regret": self.quality_regret,
            "events": [
                {"t": e.time, "arm": e.arm + 1, "kind": e.kind.value} for e in self.events
            ],
        }


def simulate_run(
    instance: BanditInstance,
    algorithm: str,
    horizon: int,
    seed: int,
    delta: Optional[float] = None,
    checkpoint_grid: Optional[Sequence[int]] = None,
    etc_budget_fraction: float = 0.2,
    run_index: int = 0,
    observer: Optional[DecisionObserver] = None,
    reward_block_size: int = 4096,
) -> RunTrace:
    """
    One seeded run of `algorithm` for exactly `horizon` samples.

    Once the policy has committed, the rest of the horizon is accounted in
    bulk; counts and regrets are identical to stepping sample by sample.
    """
    algorithm = Algorithm(algorithm)
    if horizon <= instance.num_arms:
        raise ValidationError(
            f"horizon {horizon} must exceed the number of arms {instance.num_arms}", field="horizon"
        )
    grid = list(checkpoint_grid) if checkpoint_grid is not None else log_spaced_grid(horizon, 200)
    if not grid or grid[-1] != horizon or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValidationError("checkpoint grid must be increasing, start at >= 1 and end at the horizon",
                              field="checkpoint_grid")
    if delta is None:
        delta = default_delta(instance.num_arms, horizon)

    analysis = analyze(instance)
    policy = make_policy(
        algorithm,
        instance.num_arms,
        instance.alpha,
        delta,
        etc_budget_fraction=etc_budget_fraction,
        rng=policy_generator(seed, instance.num_arms),
        observer=observer,
    )
    env = RewardEnvironment(instance, seed, block_size=reward_block_size)
    acc = RegretAccumulator(analysis)

    started = time.perf_counter()
    t = 0
    next_point = 0
    while t < horizon:
        committed = policy.committed
        if committed is not None:
            for point in grid[next_point:]:
                acc.record_many(committed, point - t)
                t = point
                acc.checkpoint(t)
            next_point = len(grid)
            break

        arm = policy.select_arm(t, horizon)
        policy.observe(arm, env.sample(arm))
        acc.record(arm)
        t += 1
        if t == grid[next_point]:
            acc.checkpoint(t)
            next_point += 1

    return RunTrace(
        run_id=make_run_id(algorithm, instance.alpha, run_index),
        algorithm=algorithm.value,
        alpha=instance.alpha,
        seed=seed,
        horizon=horizon,
        delta=delta,
        checkpoints=acc.checkpoints,
        count_history=acc.count_history,
        final_counts=acc.counts,
        events=list(getattr(policy, "events", [])),
        wall_seconds=time.perf_counter() - started,
    )


def write_run_files(trace: RunTrace, output_dir: Path) -> None:
    """Write one run's curve, event log (COF variants) and summary."""
    output_dir = Path(output_dir)
    try:
        for sub in ("curves", "events", "runs"):
            (output_dir / sub).mkdir(parents=True, exist_ok=True)
        trace.curve_frame().to_csv(output_dir / "curves" / f"{trace.run_id}.csv", index=False)
        if Algorithm(trace.algorithm).is_cof:
            trace.event_frame().to_csv(output_dir / "events" / f"{trace.run_id}.csv", index=False)
        (output_dir / "runs" / f"{trace.run_id}.json").write_text(
            json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError as e:
        raise TraceIOError(str(output_dir), f"cannot write files for {trace.run_id}: {e}")


@dataclass(frozen=True)
class RunTask:
    """Picklable description of one run in a sweep."""
    instance: BanditInstance
    algorithm: str
    run_index: int
    horizon: int
    master_seed: int
    delta: float
    grid: Tuple[int, ...]
    etc_budget_fraction: float
    reward_block_size: int
    output_dir: Optional[Path]
    sweep_id: str


def execute_task(task: RunTask) -> RunTrace:
    """Run one task, writing its files if the task has an output directory."""
    alpha = task.instance.alpha
    run_id = make_run_id(task.algorithm, alpha, task.run_index)
    with log_context(sweep_id=task.sweep_id, run_id=run_id, algorithm=task.algorithm):
        try:
            seed = derive_seed(task.master_seed, task.algorithm, alpha, task.run_index)
            with PerformanceLogger("simulate_run", {"horizon": task.horizon, "alpha": alpha}):
                trace = simulate_run(
                    task.instance,
                    task.algorithm,
                    task.horizon,
                    seed,
                    delta=task.delta,
                    checkpoint_grid=task.grid,
                    etc_budget_fraction=task.etc_budget_fraction,
                    run_index=task.run_index,
                    reward_block_size=task.reward_block_size,
                )
            if task.output_dir is not None:
                write_run_files(trace, task.output_dir)
            return trace
        except RunFailedError:
            raise
        except Exception as e:
            raise RunFailedError(task.algorithm, alpha, task.run_index, f"{type(e).__name__}: {e}") from e


@dataclass
class SweepResult:
    traces: List[RunTrace]
    output_dir: Path
    written: Dict[str, Path] = field(default_factory=dict)


def sweep_id_for(config: ExperimentConfig) -> str:
    digest = hashlib.blake2b(config.model_dump_json().encode("utf-8"), digest_size=4).hexdigest()
    return f"sweep-{digest}"


def resolve_output_dir(config: ExperimentConfig, settings: Settings) -> Path:
    if config.output_dir is not None:
        return Path(config.output_dir)
    return Path(settings.output.default_output_dir) / Path(config.instance_path).stem


def build_tasks(config: ExperimentConfig, settings: Settings) -> List[RunTask]:
    """Expand a config into one task per (algorithm, alpha, run), in sweep order."""
    try:
        text = Path(config.instance_path).read_text(encoding="utf-8")
    except OSError as e:
        raise TraceIOError(str(config.instance_path), f"cannot read instance: {e}")
    base = parse_instance(text)
    if config.horizon <= base.num_arms:
        raise InvalidConfigError("horizon", config.horizon, f"must be > K = {base.num_arms}")

    count = config.checkpoint_count or settings.simulation.checkpoint_count
    grid = tuple(log_spaced_grid(config.horizon, count))
    delta = config.delta_override or default_delta(base.num_arms, config.horizon)
    etc_fraction = config.etc_budget_fraction or settings.simulation.etc_budget_fraction
    output_dir = resolve_output_dir(config, settings) if config.write_run_files else None
    sweep_id = sweep_id_for(config)

    return [
        RunTask(
            instance=base.with_alpha(alpha),
            algorithm=Algorithm(algorithm).value,
            run_index=run_index,
            horizon=config.horizon,
            master_seed=config.master_seed,
            delta=delta,
            grid=grid,
            etc_budget_fraction=etc_fraction,
            reward_block_size=settings.simulation.reward_block_size,
            output_dir=output_dir,
            sweep_id=sweep_id,
        )
        for algorithm in config.algorithms
        for alpha in config.alphas
        for run_index in range(config.num_runs)
    ]


def run_sweep(config: ExperimentConfig, settings: Optional[Settings] = None) -> SweepResult:
    """
    Execute every run of a sweep, then write the sweep-level tables.

    With more than one worker, runs go to a process pool; a failed run
    cancels the runs not yet started and surfaces as RunFailedError.
    """
    settings = settings or Settings.load_default()
    tasks = build_tasks(config, settings)
    workers = config.workers or settings.simulation.workers
    sweep_id = tasks[0].sweep_id if tasks else sweep_id_for(config)
    output_dir = resolve_output_dir(config, settings)

    with log_context(sweep_id=sweep_id):
        logger.info(
            "Starting sweep",
            extra={"runs": len(tasks), "workers": workers, "horizon": config.horizon}
        )
        with PerformanceLogger("run_sweep", {"runs": len(tasks)}, warn_after_ms=3_600_000.0):
            if workers <= 1:
                traces = [execute_task(task) for task in tasks]
            else:
                traces = _run_parallel(tasks, workers)

        written = write_sweep_tables(traces, output_dir)
        logger.info("Sweep complete", extra={"runs": len(traces), "output_dir": str(output_dir)})
    return SweepResult(traces=traces, output_dir=output_dir, written=written)


def _run_parallel(tasks: List[RunTask], workers: int) -> List[RunTrace]:
    traces: List[RunTrace] = []
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(execute_task, task) for task in tasks]
        done, pending = wait(futures, return_when=FIRST_EXCEPTION)
        for future in done:
            error = future.exception()
            if error is not None:
                for other in pending:
                    other.cancel()
                if isinstance(error, MabcsError):
                    raise error
                raise RunFailedError("unknown", float("nan"), -1, str(error))
        traces.extend(future.result() for future in futures)
    return traces

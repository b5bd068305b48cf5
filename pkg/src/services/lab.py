"""
Parameter sweeps for walker-lab.

A sweep runs one simulation per (Lambda, M, replicate) point, analyses it
and appends a RunRecord to the run directory. Records are appended in the
canonical key order whatever the completion order, so the records file
is a pure function of the SweepSpec; a re-run skips keys already present.
"""

import asyncio
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from src.adapters.storage import RunDirectory, RunRecordRepository, write_trajectory
from src.common.config import Config
from src.common.exceptions import AnalysisError, ConfigError, WalkerLabError
from src.common.logging import get_logger
from src.domain.models import RunRecord, SimConfig, SweepSpec
from src.services.calibration import calibrate_kick
from src.services.cassini import fit_cassini, orbit_shape
from src.services.dynamics import simulate, transient_length
from src.services.eigenstates import EPSILON, classify
from src.services.observables import measure

logger = get_logger(__name__)


@dataclass(frozen=True)
class SweepOptions:
    """Per-point analysis and calibration settings of a sweep."""
    transient_min: int = 2000
    transient_factor: float = 20.0
    epsilon: float = EPSILON
    fit_min_samples: int = 50
    fit_max_samples: int = 2000
    keep_trajectories: bool = False
    calibrate: bool = True
    calibration_bounces: int = 5000
    tail_fraction: float = 0.2
    tolerance: float = 0.01
    kick_max: float = 1.0
    max_iterations: int = 60

    @classmethod
    def from_config(cls, config: Config, **overrides: Any) -> "SweepOptions":
        sim = config.simulation
        cal = config.calibration
        ana = config.analysis
        values = dict(
            transient_min=sim.get("transient_min", 2000),
            transient_factor=sim.get("transient_factor", 20.0),
            epsilon=ana.get("epsilon", EPSILON),
            fit_min_samples=ana.get("fit_min_samples", 50),
            fit_max_samples=ana.get("fit_max_samples", 2000),
            calibration_bounces=cal.get("bounces", 5000),
            tail_fraction=cal.get("tail_fraction", 0.2),
            tolerance=cal.get("tolerance", 0.01),
            kick_max=cal.get("kick_max", 1.0),
            max_iterations=cal.get("max_iterations", 60),
        )
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True)
class PointTask:
    """Everything a worker process needs for one grid point."""
    key: tuple[int, int, int]
    config: SimConfig
    bounces: int
    options: SweepOptions
    trajectory_dir: str | None = None
    error: str | None = None


def derive_seed(base_seed: int, lambda_index: int, memory_index: int, replicate: int) -> int:
    """Independent 64-bit seed for one grid point, from a SeedSequence spawn key."""
    sequence = np.random.SeedSequence(base_seed, spawn_key=(lambda_index, memory_index, replicate))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _analyse(task: PointTask) -> RunRecord:
    config = task.config
    options = task.options
    trajectory = simulate(config, task.bounces)
    transient = transient_length(config, options.transient_min, options.transient_factor)
    observables = measure(trajectory, config.target_speed, transient)
    label = classify(observables, options.epsilon)

    foci_count = 3 if label.n == 4 and abs(label.m) == 2 else 2
    kept = trajectory.after_transient(transient)
    try:
        fit = fit_cassini(kept, foci_count, options.fit_min_samples, options.fit_max_samples)
    except AnalysisError as e:
        logger.debug("Cassini fit skipped", key=list(task.key), reason=str(e))
        fit = None
    shape = orbit_shape(label, fit if fit is not None and fit.foci_count == 2 else None)

    if task.trajectory_dir is not None:
        write_trajectory(kept, Path(task.trajectory_dir))
    return RunRecord(task.key, config, observables, label, fit, shape.value)


def run_point(task: PointTask) -> RunRecord:
    """
    Simulate and analyse one grid point.

    Never raises: failures are stored in the record's error field.
    """
    started = time.perf_counter()
    if task.error is not None:
        record = RunRecord(task.key, task.config, error=task.error)
    else:
        try:
            record = _analyse(task)
        except WalkerLabError as e:
            record = RunRecord(task.key, task.config, error=f"{type(e).__name__}: {e}")
        except Exception as e:
            logger.error("Unexpected error in sweep point", key=list(task.key), error=str(e))
            record = RunRecord(task.key, task.config, error=f"{type(e).__name__}: {e}")
    runtime = {"elapsed_s": round(time.perf_counter() - started, 3), "pid": os.getpid()}
    return replace(record, runtime=runtime)


class SweepRunner:
    """
    Runs a SweepSpec into a run directory.

    Grid points are dispatched to a process pool of `jobs` workers; the
    kick is calibrated once per memory value in the parent process.
    """

    def __init__(
        self,
        spec: SweepSpec,
        run_dir: RunDirectory,
        jobs: int = 1,
        options: SweepOptions | None = None,
    ):
        if jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {jobs}")
        self._spec = spec.validate()
        self._dir = run_dir
        self._jobs = jobs
        self._options = options or SweepOptions()
        self._repo = RunRecordRepository(run_dir)

    def _kicks(self) -> dict[int, tuple[float | None, str | None]]:
        """(kick, error) per memory index."""
        base = self._spec.base_config
        options = self._options
        kicks: dict[int, tuple[float | None, str | None]] = {}
        for j, memory in enumerate(self._spec.memory_grid):
            if not options.calibrate:
                kicks[j] = (base.kick, None)
                continue
            try:
                kick = calibrate_kick(
                    base.replace(memory=memory),
                    base.target_speed,
                    bounces=options.calibration_bounces,
                    tail_fraction=options.tail_fraction,
                    tolerance=options.tolerance,
                    kick_max=options.kick_max,
                    max_iterations=options.max_iterations,
                )
                kicks[j] = (kick, None)
                logger.info("Kick calibrated for memory", memory=memory, kick=kick)
            except WalkerLabError as e:
                logger.warning("Kick calibration failed", memory=memory, error=str(e))
                kicks[j] = (None, f"{type(e).__name__}: {e}")
        return kicks

    def tasks(self, skip: set[tuple[int, int, int]] | None = None) -> list[PointTask]:
        """Pending tasks in canonical key order."""
        skip = skip or set()
        spec = self._spec
        base = spec.base_config
        pending = [key for key in spec.keys() if key not in skip]
        if not pending:
            return []
        kicks = self._kicks()
        tasks = []
        for i, j, r in pending:
            kick, error = kicks[j]
            config = base.replace(
                lambda_well=spec.lambda_grid[i],
                memory=spec.memory_grid[j],
                seed=derive_seed(base.seed, i, j, r),
                kick=base.kick if kick is None else kick,
            )
            trajectory_dir = None
            if self._options.keep_trajectories:
                trajectory_dir = str(self._dir.trajectory_dir((i, j, r)))
            tasks.append(PointTask((i, j, r), config, spec.bounces, self._options, trajectory_dir, error))
        return tasks

    async def run(self) -> list[RunRecord]:
        """
        Execute every pending point and return all records, sorted by key.

        Raises:
            StorageError: On I/O failure of the run directory
        """
        self._dir.ensure(self._options.keep_trajectories)
        self._dir.write_spec(self._spec)
        self._dir.drop_partial_line()
        done = self._repo.completed_keys()
        if done:
            logger.info("Skipping completed points", completed=len(done), total=self._spec.point_count)
        tasks = self.tasks(skip=done)
        logger.info("Sweep started", points=len(tasks), jobs=self._jobs, path=str(self._dir.path))

        if self._jobs == 1:
            for task in tasks:
                self._store(run_point(task))
        else:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=self._jobs) as pool:
                futures = [loop.run_in_executor(pool, run_point, task) for task in tasks]
                # in-order drain: out-of-order completions wait in their futures
                for future in futures:
                    self._store(await future)

        records = self._repo.list()
        failed = sum(1 for record in records if not record.ok)
        logger.info("Sweep finished", records=len(records), failed=failed)
        return records

    def _store(self, record: RunRecord) -> None:
        self._repo.append(record)
        logger.info(
            "Sweep point done",
            key=list(record.key),
            lambda_well=record.lambda_well,
            memory=record.memory,
            ok=record.ok,
            error=record.error,
        )


def run_sweep(
    spec: SweepSpec,
    output_dir: str | Path,
    parallelism: int = 1,
    options: SweepOptions | None = None,
) -> RunDirectory:
    """Blocking wrapper around SweepRunner; returns the run directory."""
    run_dir = RunDirectory(output_dir)
    asyncio.run(SweepRunner(spec, run_dir, parallelism, options).run())
    return run_dir

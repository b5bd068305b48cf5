"""
Tests for the sweep harness.

Runs are kept short and use a fixed kick so the whole grid stays cheap.
"""

import json

import pytest

from src.adapters.storage import RunDirectory, RunRecordRepository, read_trajectory
from src.common.exceptions import ConfigError
from src.domain.models import SimConfig, SweepSpec
from src.services.lab import PointTask, SweepOptions, SweepRunner, derive_seed, run_point, run_sweep

OPTIONS = SweepOptions(transient_min=50, transient_factor=0.0, calibrate=False)


@pytest.fixture
def base_config():
    return SimConfig(memory=3.0, lambda_well=0.5, kick=0.01, target_speed=0.05, seed=99)


def make_spec(base_config, lambdas=(0.4,), memories=(3.0,), replicates=1, bounces=200):
    return SweepSpec(tuple(lambdas), tuple(memories), replicates, bounces, base_config)


def stable_lines(run_dir: RunDirectory) -> list[dict]:
    """Record lines without their runtime block."""
    lines = []
    for line in run_dir.records_path.read_text().splitlines():
        document = json.loads(line)
        document.pop("runtime")
        lines.append(document)
    return lines


class TestSeeds:
    """Per-point seed derivation."""

    def test_deterministic(self):
        assert derive_seed(1, 2, 3, 4) == derive_seed(1, 2, 3, 4)

    def test_distinct_across_points(self):
        seeds = {derive_seed(7, i, j, r) for i in range(5) for j in range(3) for r in range(2)}
        assert len(seeds) == 30

    def test_depends_on_base_seed(self):
        assert derive_seed(1, 0, 0, 0) != derive_seed(2, 0, 0, 0)

    def test_unsigned_64_bit(self):
        assert 0 <= derive_seed(123, 4, 5, 6) < 2 ** 64


class TestSweepSpec:
    """Grid bookkeeping."""

    def test_canonical_order(self, base_config):
        spec = make_spec(base_config, lambdas=(0.1, 0.2), memories=(1.0, 2.0), replicates=2)
        assert list(spec.keys()) == [
            (0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 0, 1),
            (0, 1, 0), (0, 1, 1), (1, 1, 0), (1, 1, 1),
        ]
        assert spec.point_count == 8

    @pytest.mark.parametrize("changes", [
        {"lambda_grid": ()},
        {"memory_grid": (2.0, 1.0)},
        {"replicates": 0},
        {"bounces": -1},
        {"memory_grid": (0.0, 1.0)},
    ])
    def test_invalid_spec(self, base_config, changes):
        fields = dict(lambda_grid=(0.1,), memory_grid=(1.0,), replicates=1, bounces=10, base_config=base_config)
        fields.update(changes)
        with pytest.raises(ConfigError):
            SweepSpec(**fields).validate()


class TestRunPoint:
    """Single grid point."""

    def test_successful_point(self, base_config):
        record = run_point(PointTask((0, 0, 0), base_config, 300, OPTIONS))
        assert record.ok
        assert record.observables.sample_count == 250
        assert record.observables.transient_discarded == 50
        assert record.label is not None
        assert record.shape is not None
        assert record.runtime["elapsed_s"] >= 0

    def test_failure_is_recorded(self, base_config):
        """A run shorter than its transient yields an error record, not an exception."""
        record = run_point(PointTask((0, 0, 0), base_config, 30, OPTIONS))
        assert not record.ok
        assert record.error.startswith("AnalysisError")

    def test_carried_error(self, base_config):
        record = run_point(PointTask((0, 0, 0), base_config, 300, OPTIONS, error="CalibrationError: nope"))
        assert record.error == "CalibrationError: nope"
        assert record.observables is None


class TestSweep:
    """Whole sweeps."""

    def test_single_point(self, tmp_path, base_config):
        run_dir = run_sweep(make_spec(base_config), tmp_path / "run", 1, OPTIONS)
        records = RunRecordRepository(run_dir).list()
        assert len(records) == 1
        assert records[0].key == (0, 0, 0)
        assert records[0].config.seed == derive_seed(99, 0, 0, 0)
        assert records[0].config.lambda_well == 0.4

    def test_full_grid(self, tmp_path, base_config):
        spec = make_spec(base_config, lambdas=(0.3, 0.4, 0.5, 0.6, 0.7), memories=(2.0, 3.0, 4.0), replicates=2)
        run_dir = run_sweep(spec, tmp_path, 1, OPTIONS)
        records = RunRecordRepository(run_dir).list()
        assert len(records) == 30
        assert len({r.key for r in records}) == 30
        assert {r.memory for r in records} == {2.0, 3.0, 4.0}
        keys = [tuple(json.loads(line)["key"]) for line in run_dir.records_path.read_text().splitlines()]
        assert keys == list(spec.keys())

    def test_reproducible(self, tmp_path, base_config):
        spec = make_spec(base_config, lambdas=(0.4, 0.8), replicates=2)
        first = run_sweep(spec, tmp_path / "a", 1, OPTIONS)
        second = run_sweep(spec, tmp_path / "b", 1, OPTIONS)
        assert stable_lines(first) == stable_lines(second)

    def test_resume_after_interruption(self, tmp_path, base_config):
        spec = make_spec(base_config, lambdas=(0.4, 0.6, 0.8))
        run_dir = run_sweep(spec, tmp_path, 1, OPTIONS)
        complete = stable_lines(run_dir)
        lines = run_dir.records_path.read_text().splitlines()
        # drop the last record and leave a half-written line behind
        run_dir.records_path.write_text("\n".join(lines[:-1]) + "\n" + lines[-1][:25])

        run_sweep(spec, tmp_path, 1, OPTIONS)
        records = RunRecordRepository(run_dir).list()
        assert len(records) == 3
        resumed = [r.to_dict() for r in records]
        for document in resumed:
            document.pop("runtime")
        assert resumed == complete

    def test_resume_rejects_other_spec(self, tmp_path, base_config):
        run_sweep(make_spec(base_config), tmp_path, 1, OPTIONS)
        with pytest.raises(ConfigError):
            run_sweep(make_spec(base_config, bounces=400), tmp_path, 1, OPTIONS)

    def test_failed_points_do_not_stop_the_sweep(self, tmp_path, base_config):
        spec = make_spec(base_config, lambdas=(0.4, 0.6), bounces=30)
        records = RunRecordRepository(run_sweep(spec, tmp_path, 1, OPTIONS)).list()
        assert len(records) == 2
        assert all(r.error.startswith("AnalysisError") for r in records)

    def test_calibration_failure_is_recorded(self, tmp_path, base_config):
        options = SweepOptions(
            transient_min=50, transient_factor=0.0, calibrate=True, calibration_bounces=200, kick_max=1e-6,
        )
        records = RunRecordRepository(run_sweep(make_spec(base_config), tmp_path, 1, options)).list()
        assert records[0].error.startswith("CalibrationError")

    def test_keep_trajectories(self, tmp_path, base_config):
        options = SweepOptions(transient_min=50, transient_factor=0.0, calibrate=False, keep_trajectories=True)
        run_dir = run_sweep(make_spec(base_config), tmp_path, 1, options)
        trajectory = read_trajectory(run_dir.trajectory_dir((0, 0, 0)) / "trajectory.csv")
        assert len(trajectory) == 150
        assert trajectory.transient_discarded == 50
        assert trajectory.config.lambda_well == 0.4

    def test_jobs_must_be_positive(self, tmp_path, base_config):
        with pytest.raises(ConfigError):
            SweepRunner(make_spec(base_config), RunDirectory(tmp_path), jobs=0)

    @pytest.mark.asyncio
    async def test_parallel_matches_serial(self, tmp_path, base_config):
        """Worker count does not change the records file."""
        spec = make_spec(base_config, lambdas=(0.4, 0.6), memories=(2.0, 3.0))
        serial = RunDirectory(tmp_path / "serial")
        parallel = RunDirectory(tmp_path / "parallel")
        await SweepRunner(spec, serial, jobs=1, options=OPTIONS).run()
        records = await SweepRunner(spec, parallel, jobs=2, options=OPTIONS).run()
        assert len(records) == 4
        assert stable_lines(serial) == stable_lines(parallel)

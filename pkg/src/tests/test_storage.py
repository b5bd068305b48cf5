"""
Tests for trajectory files, run directories and the record repository.
"""

import json
import math

import numpy as np
import pytest

from src.adapters.storage import (
    RunDirectory,
    RunRecordRepository,
    read_config,
    read_trajectory,
    write_config,
    write_table,
    write_trajectory,
)
from src.common.exceptions import ConfigError, MalformedFileError, StorageError
from src.domain.models import EigenstateLabel, Observables, RunRecord, SimConfig, SweepSpec
from src.services.dynamics import simulate


@pytest.fixture
def config():
    return SimConfig(memory=8.0, lambda_well=0.6, kick=0.01, seed=42)


def record(key, config, ok=True):
    if not ok:
        return RunRecord(key, config, error="AnalysisError: too short")
    return RunRecord(
        key,
        config,
        observables=Observables(0.5, 0.4, 100, 20),
        label=EigenstateLabel(1, 1, 0.1),
        shape="circle",
        runtime={"elapsed_s": 0.1, "pid": 1},
    )


class TestTrajectoryFiles:
    """CSV + config.json sidecar."""

    def test_round_trip_is_exact(self, tmp_path, config):
        trajectory = simulate(config, 200).after_transient(50)
        path = write_trajectory(trajectory, tmp_path)
        assert path.read_text().splitlines()[0] == "bounce,t,x,y,vx,vy"
        loaded = read_trajectory(path)
        assert np.array_equal(loaded.bounces, trajectory.bounces)
        assert np.array_equal(loaded.positions, trajectory.positions)
        assert np.array_equal(loaded.velocities, trajectory.velocities)
        assert loaded.config == config
        assert loaded.transient_discarded == 50

    def test_sidecar_records_transient(self, tmp_path, config):
        write_trajectory(simulate(config, 30).after_transient(10), tmp_path)
        document = json.loads((tmp_path / "config.json").read_text())
        assert document["transient_discarded"] == 10
        assert document["spatial_damping"] is None

    def test_header_only_file_is_empty(self, tmp_path, config):
        path = write_trajectory(simulate(config, 0), tmp_path)
        assert len(read_trajectory(path)) == 0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        path.write_text("")
        with pytest.raises(MalformedFileError) as info:
            read_trajectory(path)
        assert info.value.line_number == 1

    def test_bad_header(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        path.write_text("k,x,y\n0,1,2\n")
        with pytest.raises(MalformedFileError) as info:
            read_trajectory(path)
        assert info.value.line_number == 1

    @pytest.mark.parametrize("bad_row", ["2,2,0.1,0.2,0.3", "2,2,0.1,abc,0.3,0.4", "2,2,0.1,nan,0.3,0.4", "4,4,0,0,0,0", "2.5,2,0,0,0,0"])
    def test_bad_row_reports_line(self, tmp_path, bad_row):
        path = tmp_path / "trajectory.csv"
        path.write_text("bounce,t,x,y,vx,vy\n0,0,0,0,0,0\n1,1,0,0,0,0\n" + bad_row + "\n")
        with pytest.raises(MalformedFileError) as info:
            read_trajectory(path)
        assert info.value.line_number == 4
        assert ":4" in str(info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(StorageError):
            read_trajectory(tmp_path / "nope.csv")

    def test_config_round_trip(self, tmp_path, config):
        path = write_config(config.replace(spatial_damping=3.0), tmp_path / "config.json")
        assert read_config(path) == config.replace(spatial_damping=3.0)

    def test_invalid_config_rejected(self, tmp_path, config):
        path = write_config(config.replace(friction=1.5), tmp_path / "config.json")
        with pytest.raises(ConfigError):
            read_config(path)

    def test_config_not_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{\n  \"memory\": 1,\n  oops\n}")
        with pytest.raises(MalformedFileError) as info:
            read_config(path)
        assert info.value.line_number == 3


class TestRunDirectory:
    """spec.json and records.jsonl."""

    @pytest.fixture
    def spec(self, config):
        return SweepSpec((0.4, 0.6), (5.0,), 2, 100, config)

    def test_layout(self, tmp_path, spec):
        run_dir = RunDirectory(tmp_path / "run")
        run_dir.ensure(keep_trajectories=True)
        run_dir.write_spec(spec)
        assert run_dir.exists()
        assert run_dir.records_path.exists()
        assert run_dir.trajectories_path.is_dir()
        assert run_dir.read_spec() == spec
        assert run_dir.trajectory_dir((1, 0, 3)).name == "L001_M000_r03"

    def test_same_spec_resumes(self, tmp_path, spec):
        run_dir = RunDirectory(tmp_path)
        run_dir.ensure()
        run_dir.write_spec(spec)
        run_dir.write_spec(spec)

    def test_different_spec_rejected(self, tmp_path, spec):
        run_dir = RunDirectory(tmp_path)
        run_dir.ensure()
        run_dir.write_spec(spec)
        with pytest.raises(ConfigError):
            run_dir.write_spec(SweepSpec((0.4, 0.6), (5.0,), 3, 100, spec.base_config))


class TestRunRecordRepository:
    """Append-only records."""

    @pytest.fixture
    def repo(self, tmp_path):
        run_dir = RunDirectory(tmp_path)
        run_dir.ensure()
        return RunRecordRepository(run_dir)

    def test_append_and_list_sorted(self, repo, config):
        repo.append(record((1, 0, 0), config))
        repo.append(record((0, 0, 0), config, ok=False))
        records = repo.list()
        assert [r.key for r in records] == [(0, 0, 0), (1, 0, 0)]
        assert not records[0].ok
        assert records[1].ok
        assert records[1] == record((1, 0, 0), config)
        assert records[1].runtime == {"elapsed_s": 0.1, "pid": 1}

    def test_completed_keys_and_get(self, repo, config):
        repo.append(record((0, 1, 0), config))
        assert repo.completed_keys() == {(0, 1, 0)}
        assert repo.get((0, 1, 0)).label.node == (1, 1)
        assert repo.get((5, 5, 5)) is None

    def test_truncated_last_line_is_skipped(self, repo, config):
        repo.append(record((0, 0, 0), config))
        with repo._dir.records_path.open("a") as f:
            f.write('{"key": [1, 0')
        assert [r.key for r in repo.list()] == [(0, 0, 0)]

    def test_partial_line_is_cut_before_appending(self, repo, config):
        repo.append(record((0, 0, 0), config))
        with repo._dir.records_path.open("a") as f:
            f.write('{"key": [1, 0')
        repo._dir.drop_partial_line()
        repo.append(record((1, 0, 0), config))
        assert [r.key for r in repo.list()] == [(0, 0, 0), (1, 0, 0)]

    def test_bad_complete_line_raises(self, repo, config):
        repo.append(record((0, 0, 0), config))
        with repo._dir.records_path.open("a") as f:
            f.write("not json\n")
        repo.append(record((1, 0, 0), config))
        with pytest.raises(MalformedFileError) as info:
            repo.list()
        assert info.value.line_number == 2

    def test_record_missing_fields(self, repo):
        repo._dir.append_line({"key": [0, 0, 0]})
        with pytest.raises(MalformedFileError):
            repo.list()

    def test_lines_are_compact_json(self, repo, config):
        repo.append(record((0, 0, 0), config))
        line = repo._dir.records_path.read_text().splitlines()[0]
        assert ", " not in line
        assert json.loads(line)["lambda_well"] == 0.6


class TestTables:
    """Figure CSV output."""

    def test_write_table(self, tmp_path):
        path = write_table(tmp_path / "t.csv", ("a", "b", "c"), [(1, 0.1, None), (2, math.pi, "x")])
        lines = path.read_text().splitlines()
        assert lines[0] == "a,b,c"
        assert lines[1] == "1,0.1,"
        assert float(lines[2].split(",")[1]) == math.pi

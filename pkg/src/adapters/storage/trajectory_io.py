"""
Trajectory files for walker-lab.

A trajectory is stored as a CSV file with the header
`bounce,t,x,y,vx,vy` (floats written with 17 significant digits, so a
round trip is exact) and a `config.json` sidecar holding the SimConfig
that produced it.
"""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from src.common.config import SIM_CONFIG_SCHEMA_PATH, validate_document
from src.common.exceptions import ConfigError, MalformedFileError, StorageError
from src.common.logging import get_logger
from src.domain.models import SimConfig, Trajectory

logger = get_logger(__name__)

TRAJECTORY_HEADER = ("bounce", "t", "x", "y", "vx", "vy")
TRAJECTORY_FILE = "trajectory.csv"
CONFIG_FILE = "config.json"


def write_config(config: SimConfig, path: Path, extra: dict[str, Any] | None = None) -> Path:
    """Write a SimConfig document (plus optional extra top-level keys)."""
    document = config.to_dict()
    if extra:
        document = {**document, **extra}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot write {path}: {e}")
    return path


def read_config(path: Path) -> SimConfig:
    """
    Load and validate a SimConfig document.

    Raises:
        StorageError: Missing file
        MalformedFileError: Not JSON
        ConfigError: Schema or invariant violation
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise StorageError(f"Cannot read {path}: {e}")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedFileError(f"Invalid JSON: {e.msg}", path=str(path), line_number=e.lineno)
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    config_part = {k: v for k, v in document.items() if k in SimConfig.__dataclass_fields__}
    validate_document(config_part, SIM_CONFIG_SCHEMA_PATH, what=str(path))
    return SimConfig.from_dict(config_part).validate()


def write_trajectory(trajectory: Trajectory, directory: Path, name: str = TRAJECTORY_FILE) -> Path:
    """
    Write `name` (CSV) and, when the trajectory carries one, config.json into directory.

    Returns:
        Path of the CSV file
    """
    path = directory / name
    table = np.column_stack([
        trajectory.bounces.astype(float),
        trajectory.times,
        trajectory.positions,
        trajectory.velocities,
    ]) if len(trajectory) else np.empty((0, len(TRAJECTORY_HEADER)))
    try:
        directory.mkdir(parents=True, exist_ok=True)
        np.savetxt(
            path,
            table,
            fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g", "%.17g"],
            delimiter=",",
            header=",".join(TRAJECTORY_HEADER),
            comments="",
        )
    except OSError as e:
        raise StorageError(f"Cannot write {path}: {e}")
    if trajectory.config is not None:
        write_config(
            trajectory.config,
            directory / CONFIG_FILE,
            extra={"transient_discarded": trajectory.transient_discarded},
        )
    logger.debug("Trajectory written", path=str(path), records=len(trajectory))
    return path


def _parse_row(fields: list[str], path: Path, line_number: int) -> list[float]:
    if len(fields) != len(TRAJECTORY_HEADER):
        raise MalformedFileError(
            f"expected {len(TRAJECTORY_HEADER)} columns, got {len(fields)}",
            path=str(path), line_number=line_number,
        )
    try:
        values = [float(f) for f in fields]
    except ValueError:
        raise MalformedFileError("non-numeric value", path=str(path), line_number=line_number)
    if not all(math.isfinite(v) for v in values):
        raise MalformedFileError("non-finite value", path=str(path), line_number=line_number)
    if values[0] != int(values[0]):
        raise MalformedFileError("bounce index is not an integer", path=str(path), line_number=line_number)
    return values


def read_trajectory(path: Path, config: SimConfig | None = None) -> Trajectory:
    """
    Load a trajectory CSV.

    The sidecar config.json next to the file is picked up when `config`
    is not given and the sidecar exists.

    Raises:
        StorageError: Missing file
        MalformedFileError: Empty file, bad header, bad row or non-consecutive bounces
    """
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise StorageError(f"Cannot read {path}: {e}")
    if not lines:
        raise MalformedFileError("empty file", path=str(path), line_number=1)
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != TRAJECTORY_HEADER:
        raise MalformedFileError(
            f"expected header {','.join(TRAJECTORY_HEADER)}", path=str(path), line_number=1,
        )

    rows = []
    previous = None
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        values = _parse_row(line.split(","), path, line_number)
        bounce = int(values[0])
        if previous is not None and bounce != previous + 1:
            raise MalformedFileError("bounces are not consecutive", path=str(path), line_number=line_number)
        previous = bounce
        rows.append(values)

    sidecar = path.parent / CONFIG_FILE
    if config is None and sidecar.exists():
        config = read_config(sidecar)

    if not rows:
        return Trajectory.empty(config)
    table = np.array(rows)
    return Trajectory.from_arrays(
        table[:, 2:4], table[:, 4:6], config, start_bounce=int(table[0, 0]),
    )

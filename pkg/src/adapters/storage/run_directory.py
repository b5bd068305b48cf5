"""
Sweep run directory layout and low-level file access.

    <run>/spec.json          the SweepSpec
    <run>/records.jsonl      one RunRecord per line, append-only
    <run>/trajectories/      optional per-point trajectory CSVs
"""

import json
from pathlib import Path
from typing import Any, Iterator

from src.common.config import SIM_CONFIG_SCHEMA_PATH, validate_document
from src.common.exceptions import ConfigError, MalformedFileError, StorageError
from src.common.logging import get_logger
from src.domain.models import SweepSpec

logger = get_logger(__name__)

SPEC_FILE = "spec.json"
RECORDS_FILE = "records.jsonl"
TRAJECTORIES_DIR = "trajectories"


class RunDirectory:
    """Owns one sweep output directory."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    @property
    def spec_path(self) -> Path:
        return self.path / SPEC_FILE

    @property
    def records_path(self) -> Path:
        return self.path / RECORDS_FILE

    @property
    def trajectories_path(self) -> Path:
        return self.path / TRAJECTORIES_DIR

    def trajectory_dir(self, key: tuple[int, int, int]) -> Path:
        """Per-point directory, named lambda-memory-replicate."""
        i, j, r = key
        return self.trajectories_path / f"L{i:03d}_M{j:03d}_r{r:02d}"

    def exists(self) -> bool:
        return self.spec_path.exists()

    def ensure(self, keep_trajectories: bool = False) -> None:
        """Create the directory layout if missing."""
        try:
            self.path.mkdir(parents=True, exist_ok=True)
            if keep_trajectories:
                self.trajectories_path.mkdir(exist_ok=True)
            self.records_path.touch(exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create run directory {self.path}: {e}")

    def drop_partial_line(self) -> None:
        """Cut a half-written last record so the next append starts on a fresh line."""
        if not self.records_path.exists():
            return
        try:
            text = self.records_path.read_text(encoding="utf-8")
            if text and not text.endswith("\n"):
                self.records_path.write_text(text[: text.rfind("\n") + 1], encoding="utf-8")
                logger.warning("Dropped truncated record line", path=str(self.records_path))
        except OSError as e:
            raise StorageError(f"Cannot repair {self.records_path}: {e}")

    def write_spec(self, spec: SweepSpec) -> None:
        """Write spec.json, or check it matches when resuming."""
        document = spec.to_dict()
        if self.exists():
            existing = self.read_spec()
            if existing.to_dict() != document:
                raise ConfigError(f"{self.spec_path} holds a different sweep; use a fresh directory")
            logger.info("Resuming sweep", path=str(self.path))
            return
        try:
            self.spec_path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as e:
            raise StorageError(f"Cannot write {self.spec_path}: {e}")

    def read_spec(self) -> SweepSpec:
        """
        Load spec.json.

        Raises:
            StorageError: Missing file
            MalformedFileError: Not JSON
            ConfigError: Invalid base configuration
        """
        try:
            document = json.loads(self.spec_path.read_text(encoding="utf-8"))
        except OSError as e:
            raise StorageError(f"Cannot read {self.spec_path}: {e}")
        except json.JSONDecodeError as e:
            raise MalformedFileError(f"Invalid JSON: {e.msg}", path=str(self.spec_path), line_number=e.lineno)
        try:
            validate_document(document["base_config"], SIM_CONFIG_SCHEMA_PATH, what="spec.json base_config")
            return SweepSpec.from_dict(document).validate()
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{self.spec_path}: invalid sweep spec: {e}")

    def append_line(self, document: dict[str, Any]) -> None:
        """Append one JSON document as a single line and flush it."""
        line = json.dumps(document, sort_keys=True, separators=(",", ":"))
        try:
            with self.records_path.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
        except OSError as e:
            raise StorageError(f"Cannot append to {self.records_path}: {e}")

    def iter_lines(self) -> Iterator[tuple[int, dict[str, Any]]]:
        """
        Yield (line_number, document) for every record line.

        A truncated last line (crash mid-write) is skipped with a warning;
        any other bad line raises MalformedFileError.
        """
        if not self.records_path.exists():
            return
        try:
            lines = self.records_path.read_text(encoding="utf-8").split("\n")
        except OSError as e:
            raise StorageError(f"Cannot read {self.records_path}: {e}")
        # text ends with "\n" when the last write completed
        complete = lines[:-1]
        tail = lines[-1]
        for line_number, line in enumerate(complete, start=1):
            if not line.strip():
                continue
            try:
                yield line_number, json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedFileError(f"Invalid record: {e.msg}", path=str(self.records_path), line_number=line_number)
        if tail.strip():
            logger.warning("Skipping truncated record line", path=str(self.records_path), line_number=len(lines))

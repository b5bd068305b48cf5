"""
Repository classes for walker-lab run records.
"""

from typing import Any

from src.adapters.storage.run_directory import RunDirectory
from src.common.exceptions import MalformedFileError
from src.common.logging import get_logger
from src.domain.models import RunRecord

logger = get_logger(__name__)


class RunRecordRepository:
    """Append-only store of RunRecords in a run directory's records.jsonl."""

    def __init__(self, run_dir: RunDirectory):
        self._dir = run_dir

    def append(self, record: RunRecord) -> RunRecord:
        """Append one record."""
        self._dir.append_line(record.to_dict())
        logger.debug("Record appended", key=list(record.key), ok=record.ok)
        return record

    def list(self) -> list[RunRecord]:
        """All records sorted by key; the last copy of a key wins."""
        by_key: dict[tuple[int, int, int], RunRecord] = {}
        for line_number, row in self._dir.iter_lines():
            record = self._row_to_model(row, line_number)
            by_key[record.key] = record
        return [by_key[k] for k in sorted(by_key)]

    def completed_keys(self) -> set[tuple[int, int, int]]:
        """Keys that already have a record."""
        return {record.key for record in self.list()}

    def get(self, key: tuple[int, int, int]) -> RunRecord | None:
        for record in self.list():
            if record.key == key:
                return record
        return None

    def _row_to_model(self, row: dict[str, Any], line_number: int) -> RunRecord:
        """Convert a JSON line to a model."""
        try:
            return RunRecord.from_dict(row)
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedFileError(
                f"Invalid record: {e}", path=str(self._dir.records_path), line_number=line_number,
            )

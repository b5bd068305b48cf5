"""
Storage adapters for walker-lab.
"""

from src.adapters.storage.repositories import RunRecordRepository
from src.adapters.storage.run_directory import RunDirectory
from src.adapters.storage.tables import write_table
from src.adapters.storage.trajectory_io import (
    read_config,
    read_trajectory,
    write_config,
    write_trajectory,
)

__all__ = [
    "RunDirectory",
    "RunRecordRepository",
    "write_table",
    "read_config",
    "read_trajectory",
    "write_config",
    "write_trajectory",
]

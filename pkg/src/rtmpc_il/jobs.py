#!/usr/bin/env python3
"""Resumable job tracking for comparison sweeps.

A job is the list of ``method@seed`` cells of one sweep. Its state and
every finished cell record are persisted as JSON, so rerunning a sweep
into the same directory skips the cells already done.
"""

import json as _json
import time as _time
from dataclasses import asdict as _asdict
from dataclasses import dataclass as _dataclass
from dataclasses import field as _field
from pathlib import Path as _Path
from typing import Optional as _Optional

from ._core.errors import CheckpointSchemaError

__all__ = ["Job", "CellStore"]


@_dataclass
class Job:
    """Sweep cells with per-cell outcome."""

    id: str
    cells: list[str]  # method@seed
    completed: list[str] = _field(default_factory=list)
    failed: dict[str, str] = _field(default_factory=dict)  # cell -> error
    status: str = "pending"  # pending, running, completed, failed
    config_hash: str = ""
    created_at: float = _field(default_factory=_time.time)
    updated_at: float = _field(default_factory=_time.time)

    @property
    def pending(self) -> list[str]:
        """Cells neither completed nor failed."""
        done = set(self.completed) | set(self.failed)
        return [c for c in self.cells if c not in done]

    def to_dict(self) -> dict:
        return _asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Job":
        return cls(**data)


class CellStore:
    """Sweep job plus one JSON record per finished cell.

    The job id is derived from ``config_hash`` so that only a rerun of the
    same resolved configuration resumes it. Failed cells are retried on
    resume; a job whose cell list changed starts over.

    Layout::

        <directory>/job-<hash>.json
        <directory>/cells/<method@seed>.json
    """

    def __init__(self, directory, cells: list[str], config_hash: str = ""):
        self.directory = _Path(directory)
        self.cells_dir = self.directory / "cells"
        self.cells_dir.mkdir(parents=True, exist_ok=True)
        self.job_path = self.directory / f"job-{config_hash[:12] or 'default'}.json"
        job = self._load()
        if job is None or job.cells != list(cells):
            job = Job(id=self.job_path.stem, cells=list(cells), config_hash=config_hash)
        else:
            job.failed = {}
        job.status = "running"
        self.job = job
        self._save()

    def _load(self) -> _Optional[Job]:
        if not self.job_path.exists():
            return None
        try:
            return Job.from_dict(_json.loads(self.job_path.read_text()))
        except (ValueError, TypeError) as e:
            raise CheckpointSchemaError(f"Corrupt job file {self.job_path}: {e}") from e

    def _save(self) -> None:
        self.job.updated_at = _time.time()
        self.job_path.write_text(_json.dumps(self.job.to_dict(), indent=2))

    def _cell_path(self, key: str) -> _Path:
        return self.cells_dir / f"{key.replace('/', '_')}.json"

    def records(self) -> dict[str, dict]:
        """Records of completed cells."""
        out = {}
        for key in self.job.completed:
            path = self._cell_path(key)
            if path.exists():
                out[key] = _json.loads(path.read_text())
        self.job.completed = [k for k in self.job.completed if k in out]
        return out

    def record(self, key: str, record: _Optional[dict], error: _Optional[str] = None) -> None:
        if error is None:
            self._cell_path(key).write_text(_json.dumps(record, sort_keys=True))
            if key not in self.job.completed:
                self.job.completed.append(key)
            self.job.failed.pop(key, None)
        else:
            self.job.failed[key] = error
        self._save()

    def close(self) -> Job:
        self.job.status = "completed" if not self.job.failed else "failed"
        self._save()
        return self.job


# EOF

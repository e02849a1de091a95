"""On-disk document store: one directory per run, canonical-form files.

No database; every artifact is a diffable JSON document. Phase
transitions follow composing -> finalizing -> casting -> simulating ->
sealed, with failed reachable from anywhere; sealed and failed are
terminal.
"""

from __future__ import annotations

import os
import threading
import time
import uuid
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field

from .canonical import append_jsonl, read_document, read_jsonl, write_document
from .errors import PhaseError, RunNotFoundError
from .script_model import UserRequirement

ENV_DATA_DIR = "DSTAGE_DATA_DIR"


class Phase(str, Enum):
    COMPOSING = "composing"
    FINALIZING = "finalizing"
    CASTING = "casting"
    SIMULATING = "simulating"
    SEALED = "sealed"
    FAILED = "failed"


_PHASE_ORDER = [Phase.COMPOSING, Phase.FINALIZING, Phase.CASTING, Phase.SIMULATING, Phase.SEALED]
TERMINAL_PHASES = {Phase.SEALED, Phase.FAILED}


def legal_transition(current: Phase, new: Phase) -> bool:
    if current in TERMINAL_PHASES:
        return False
    if new == Phase.FAILED:
        return True
    return _PHASE_ORDER.index(new) == _PHASE_ORDER.index(current) + 1


class RunRecord(BaseModel):
    run_id: str
    phase: Phase = Phase.COMPOSING
    created_at: float = Field(default_factory=time.time)
    requirement: UserRequirement
    config: dict = Field(default_factory=dict)
    parent_run_id: str | None = None
    error: str | None = None


class DocumentStore:
    def __init__(self, base_dir: str | Path | None = None):
        base = base_dir or os.environ.get(ENV_DATA_DIR) or "dstage-data"
        self.base_dir = Path(base)
        self.base_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, run_id: str) -> threading.Lock:
        with self._locks_guard:
            if run_id not in self._locks:
                self._locks[run_id] = threading.Lock()
            return self._locks[run_id]

    def run_dir(self, run_id: str) -> Path:
        return self.base_dir / run_id

    def new_run_id(self) -> str:
        return uuid.uuid4().hex[:12]

    def create(self, requirement: UserRequirement, config: dict, parent_run_id: str | None = None) -> RunRecord:
        record = RunRecord(
            run_id=self.new_run_id(),
            requirement=requirement,
            config=config,
            parent_run_id=parent_run_id,
        )
        self.run_dir(record.run_id).mkdir(parents=True, exist_ok=True)
        self.save(record)
        return record

    def save(self, record: RunRecord) -> None:
        with self._lock(record.run_id):
            write_document(self.run_dir(record.run_id) / "record.json", record.model_dump(mode="json"))

    def load(self, run_id: str) -> RunRecord:
        path = self.run_dir(run_id) / "record.json"
        if not path.exists():
            raise RunNotFoundError(f"no run {run_id!r}")
        return RunRecord.model_validate(read_document(path))

    def list_runs(self) -> list[str]:
        if not self.base_dir.is_dir():
            return []
        return sorted(p.name for p in self.base_dir.iterdir() if (p / "record.json").exists())

    def set_phase(self, record: RunRecord, phase: Phase, error: str | None = None) -> RunRecord:
        if not legal_transition(record.phase, phase):
            raise PhaseError(f"illegal phase transition {record.phase.value} -> {phase.value}")
        record.phase = phase
        if error is not None:
            record.error = error
        self.save(record)
        return record

    # -- event stream persistence -------------------------------------------

    def append_event(self, run_id: str, event_type: str, data: dict) -> int:
        with self._lock(run_id):
            path = self.run_dir(run_id) / "events.jsonl"
            index = self._event_count(path)
            append_jsonl(path, {"index": index, "type": event_type, "ts": time.time(), "data": data})
            return index

    def _event_count(self, path: Path) -> int:
        if not path.exists():
            return 0
        with path.open("rb") as fh:
            return sum(1 for _ in fh)

    def read_events(self, run_id: str, start: int = 0) -> list[dict]:
        path = self.run_dir(run_id) / "events.jsonl"
        if not path.exists():
            return []
        return [e for e in read_jsonl(path) if e["index"] >= start]

    # -- idempotency ----------------------------------------------------------

    def idempotency_seen(self, run_id: str, key: str) -> bool:
        """Check-and-record an idempotency key; True when already applied."""
        with self._lock(run_id):
            path = self.run_dir(run_id) / "idempotency.json"
            seen: list[str] = read_document(path) if path.exists() else []
            if key in seen:
                return True
            seen.append(key)
            write_document(path, seen)
            return False

    # -- artifact access --------------------------------------------------------

    def artifact(self, run_id: str, name: str):
        path = self.run_dir(run_id) / name
        if not path.exists():
            return None
        return read_document(path)

"""Durable append-only event storage.

One JSONL file per server, fsync'd on every append so an acknowledged
commit survives power loss. A file lock guards the single-writer contract
(the serve process and the admin CLI must not append concurrently).
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterator, List

from filelock import FileLock, Timeout

from .events import Event


class LogLockedError(RuntimeError):
    pass


class MemoryLog:
    """In-memory log for tests and simulation; same contract, no disk."""

    def __init__(self):
        self._events: List[Event] = []

    def append(self, event: Event) -> None:
        self._events.append(event)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def close(self) -> None:
        pass


class JsonlLog:
    """Append-only JSONL file, fsync-on-append, file-locked for one writer."""

    def __init__(self, path, lock_timeout_s: float = 0.5):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.path) + ".lock")
        try:
            self._lock.acquire(timeout=lock_timeout_s)
        except Timeout:
            raise LogLockedError(
                f"{self.path} is held by another process; stop it before appending"
            )
        self._events: List[Event] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._events.append(Event.from_dict(json.loads(line)))
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, event: Event) -> None:
        line = json.dumps(event.to_dict(), separators=(",", ":"), sort_keys=True)
        self._fh.write(line + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self._events.append(event)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def close(self) -> None:
        self._fh.close()
        self._lock.release()


def write_state_snapshot(path, state_doc: dict) -> None:
    """Write the periodic materialized-state snapshot atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        json.dump(state_doc, fh, sort_keys=True, indent=1)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)

"""Hybrid logical clock: total-ordered timestamps for a multi-master event log.

Each stamp combines wall-clock milliseconds with a logical counter and the
issuing server's id. Stamps are totally ordered by (physical_ms, logical,
server_id); a server never issues the same stamp twice, and every issued
stamp is strictly greater than anything the server has issued or observed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True, order=True)
class HlcTimestamp:
    physical_ms: int
    logical: int
    server_id: str

    def encode(self) -> str:
        return f"{self.physical_ms}:{self.logical}:{self.server_id}"

    @classmethod
    def decode(cls, text: str) -> "HlcTimestamp":
        physical, logical, server = text.split(":", 2)
        return cls(int(physical), int(logical), server)


def wall_clock_ms() -> int:
    return int(time.time() * 1000)


class HybridLogicalClock:
    """Per-server clock. Not thread-safe; the engine serializes access.

    ``observe`` merges a remote stamp in without advancing past it;
    ``tick`` issues a fresh stamp strictly greater than everything seen.
    """

    def __init__(self, server_id: str, now_ms: Callable[[], int] = wall_clock_ms):
        self.server_id = server_id
        self._now_ms = now_ms
        self._physical = 0
        self._logical = 0

    def tick(self) -> HlcTimestamp:
        now = self._now_ms()
        if now > self._physical:
            self._physical = now
            self._logical = 0
        else:
            self._logical += 1
        return HlcTimestamp(self._physical, self._logical, self.server_id)

    def observe(self, remote: HlcTimestamp) -> None:
        if remote.physical_ms > self._physical:
            self._physical = remote.physical_ms
            self._logical = remote.logical
        elif remote.physical_ms == self._physical and remote.logical > self._logical:
            self._logical = remote.logical

    def peek(self) -> HlcTimestamp:
        """Current high-water mark without advancing the clock."""
        return HlcTimestamp(self._physical, self._logical, self.server_id)

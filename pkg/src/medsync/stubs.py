"""Minimal thread notices carried over a constrained out-of-band channel.

During a partition a server can still learn that a case exists elsewhere:
a stub notice fits in one SMS (160 bytes) and carries just enough to list
the thread. The channel is pluggable and may drop notices; correctness
never depends on delivery.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Optional

from .hlc import HlcTimestamp

STUB_WIRE_BUDGET = 160


class OversizeStubError(ValueError):
    pass


@dataclass(frozen=True)
class StubNotice:
    thread: str
    kind: str
    creator: str
    specialization: Optional[str]
    at: HlcTimestamp

    def to_wire(self) -> bytes:
        # single-letter keys keep the payload inside one SMS
        doc = {
            "t": self.thread,
            "k": self.kind,
            "c": self.creator,
            "s": self.specialization,
            "a": self.at.encode(),
        }
        wire = json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")
        if len(wire) > STUB_WIRE_BUDGET:
            raise OversizeStubError(f"stub notice is {len(wire)} bytes (budget {STUB_WIRE_BUDGET})")
        return wire

    @classmethod
    def from_wire(cls, wire: bytes) -> "StubNotice":
        doc = json.loads(wire.decode("utf-8"))
        return cls(
            thread=doc["t"],
            kind=doc["k"],
            creator=doc["c"],
            specialization=doc.get("s"),
            at=HlcTimestamp.decode(doc["a"]),
        )


class LossyStubChannel:
    """In-memory test channel with seeded drop probability."""

    def __init__(self, deliver: Callable[[bytes], None], loss: float = 0.0, seed: int = 0):
        self._deliver = deliver
        self._loss = loss
        self._rng = random.Random(seed)
        self.sent = 0
        self.dropped = 0

    def send(self, wire: bytes) -> None:
        self.sent += 1
        if self._loss and self._rng.random() < self._loss:
            self.dropped += 1
            return
        self._deliver(wire)

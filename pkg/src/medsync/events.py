"""Replicated log events and version vectors.

An event is immutable and identified by (origin, seq); seq is contiguous
per origin in every durable log. A version vector maps origin server id to
the highest contiguously applied seq, which is all the state two servers
need to exchange to compute exact deltas.

Payload shapes by kind:
  UserCreated        {"doctor": {...}, "credential": {"salt","hash"}?}
  HospitalCreated    {"hospital": {...}}
  GroupCreated       {"group": {...}}            (members always start empty)
  MembershipChanged  {"doctor", "group", "member": bool}
  EdgeAdded          {"from", "to"}
  EdgeRemoved        {"from", "to"}
  ThreadCreated      {"thread": {...}}           (assignments via AssignmentAdded)
  MessageAdded       {"message": {...}}
  AssignmentAdded    {"thread", "assignment": {...}}
  StatusChanged      {"thread", "status", "kind"?}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping

from .hlc import HlcTimestamp

EVENT_KINDS = (
    "UserCreated",
    "HospitalCreated",
    "GroupCreated",
    "MembershipChanged",
    "EdgeAdded",
    "EdgeRemoved",
    "ThreadCreated",
    "MessageAdded",
    "AssignmentAdded",
    "StatusChanged",
)

VersionVector = Dict[str, int]


class MalformedEventError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    origin: str
    seq: int
    at: HlcTimestamp
    kind: str
    payload: Mapping

    @property
    def key(self) -> tuple:
        return (self.origin, self.seq)

    def to_dict(self) -> dict:
        return {
            "origin": self.origin,
            "seq": self.seq,
            "at": self.at.encode(),
            "kind": self.kind,
            "payload": dict(self.payload),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        try:
            ev = cls(
                origin=d["origin"],
                seq=int(d["seq"]),
                at=HlcTimestamp.decode(d["at"]),
                kind=d["kind"],
                payload=d.get("payload", {}),
            )
        except (KeyError, ValueError, AttributeError) as exc:
            raise MalformedEventError(f"bad event record: {exc}") from exc
        validate_event_shape(ev)
        return ev


def validate_event_shape(ev: Event) -> None:
    if ev.kind not in EVENT_KINDS:
        raise MalformedEventError(f"unknown event kind {ev.kind!r}")
    if ev.seq < 1:
        raise MalformedEventError(f"event seq must be >= 1, got {ev.seq}")
    if not ev.origin:
        raise MalformedEventError("event origin must be non-empty")
    if not isinstance(ev.payload, Mapping):
        raise MalformedEventError("event payload must be a mapping")


def canonical_order_key(ev: Event) -> tuple:
    """Total order independent of arrival: HLC first, then (origin, seq)."""
    return (ev.at.physical_ms, ev.at.logical, ev.at.server_id, ev.origin, ev.seq)


def vv_merge(a: VersionVector, b: VersionVector) -> VersionVector:
    merged = dict(a)
    for origin, seq in b.items():
        if seq > merged.get(origin, 0):
            merged[origin] = seq
    return merged


def vv_covers(vv: VersionVector, origin: str, seq: int) -> bool:
    return vv.get(origin, 0) >= seq


def missing_from(have: VersionVector, events: Iterable[Event]) -> list:
    """Events not yet acknowledged by ``have``, ordered by (origin, seq)."""
    out = [ev for ev in events if ev.seq > have.get(ev.origin, 0)]
    out.sort(key=lambda ev: (ev.origin, ev.seq))
    return out

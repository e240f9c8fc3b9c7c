"""Deterministic fold of an event set into materialized domain state.

The fold depends only on the event *set* (plus any ingested stub notices),
never on arrival order: entity creation resolves to the earliest stamp,
the few mutable fields (thread status/kind, group membership, colleague
edges) resolve last-writer-wins by explicit timestamp comparison, and
everything conversational is append-only. Because every rule compares
stamps rather than positions, events can be fed incrementally in any
batching and the result always equals a from-scratch fold of the union.

Events referencing a thread that is neither known nor stubbed are parked
and surfaced in diagnostics; they materialize once the missing record
arrives.

The canonical serialization (and hence the state hash used by convergence
checks) excludes stub-only threads and diagnostics: stub notices travel
over a lossy side channel and are not part of the replicated event set, so
two servers with identical digests may legitimately differ in them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .events import Event, canonical_order_key
from .hlc import HlcTimestamp
from .model import (
    Assignment,
    Doctor,
    Group,
    Hospital,
    Message,
    Thread,
)
from .stubs import StubNotice


@dataclass
class Snapshot:
    doctors: Dict[str, Doctor] = field(default_factory=dict)
    hospitals: Dict[str, Hospital] = field(default_factory=dict)
    groups: Dict[str, Group] = field(default_factory=dict)
    edges: Set[Tuple[str, str]] = field(default_factory=set)
    threads: Dict[str, Thread] = field(default_factory=dict)
    credentials: Dict[str, dict] = field(default_factory=dict)
    diagnostics: List[dict] = field(default_factory=list)

    def out_neighbors(self, doctor_id: str) -> Set[str]:
        return {to for (frm, to) in self.edges if frm == doctor_id}


def _at_key(at: HlcTimestamp) -> tuple:
    return (at.physical_ms, at.logical, at.server_id)


class StateBuilder:
    """Incremental, order-independent accumulator over applied events.

    feed_batch() may be called any number of times with any partition of
    the event set; finish() can be called between batches and always
    returns a fresh Snapshot equal to materialize(all events so far).
    """

    def __init__(self):
        self._doctors: Dict[str, Doctor] = {}
        self._credentials: Dict[str, dict] = {}
        self._hospitals: Dict[str, Hospital] = {}
        self._groups: Dict[str, Group] = {}
        self._thread_base: Dict[str, Thread] = {}
        self._created_at: Dict[tuple, tuple] = {}  # (kind, id) -> winning at key
        self._member_lww: Dict[tuple, tuple] = {}  # (group, doctor) -> (at key, member)
        self._edge_lww: Dict[tuple, tuple] = {}  # (from, to) -> (at key, present)
        self._status_lww: Dict[str, tuple] = {}  # thread -> (at key, status, kind)
        self._messages: Dict[str, Dict[str, tuple]] = {}  # thread -> id -> (at key, json, Message)
        self._assignments: Dict[str, Dict[str, Assignment]] = {}  # thread -> dedup json -> a
        self._diagnostics: List[dict] = []
        self._parked: List[Event] = []

    # -- creation: earliest stamp wins, losers become diagnostics -----------

    def _claim_create(self, kind: str, entity_id: str, at: HlcTimestamp) -> str:
        """Returns 'win', 'lose', or 'same' (idempotent re-feed)."""
        key = (kind, entity_id)
        new = _at_key(at)
        prior = self._created_at.get(key)
        if prior is None:
            self._created_at[key] = new
            return "win"
        if new == prior:
            return "same"
        loser_at = max(new, prior)
        self._diagnostics.append(
            {
                "issue": "duplicate_create",
                "entity": kind,
                "id": entity_id,
                "at": HlcTimestamp(loser_at[0], loser_at[1], loser_at[2]).encode(),
            }
        )
        if new < prior:
            self._created_at[key] = new
            return "win"
        return "lose"

    def user_created(self, ev: Event) -> None:
        doctor = Doctor.from_dict(ev.payload["doctor"])
        if self._claim_create("doctor", doctor.id, ev.at) != "win":
            return
        self._doctors[doctor.id] = doctor
        self._credentials.pop(doctor.id, None)
        cred = ev.payload.get("credential")
        if cred:
            self._credentials[doctor.id] = dict(cred)

    def hospital_created(self, ev: Event) -> None:
        hospital = Hospital.from_dict(ev.payload["hospital"])
        if self._claim_create("hospital", hospital.id, ev.at) == "win":
            self._hospitals[hospital.id] = hospital

    def group_created(self, ev: Event) -> None:
        group = Group.from_dict(ev.payload["group"])
        group.members = set()
        if self._claim_create("group", group.id, ev.at) == "win":
            self._groups[group.id] = group

    def thread_created(self, ev: Event) -> None:
        record = Thread.from_dict(ev.payload["thread"])
        record.assignments = []
        record.stub = False
        if self._claim_create("thread", record.id, ev.at) != "win":
            return
        existing = self._thread_base.get(record.id)
        if existing is not None and existing.stub:
            self._check_stub_match(existing, record)
        self._thread_base[record.id] = record

    def _check_stub_match(self, stub: Thread, record: Thread) -> None:
        mismatched = []
        if stub.kind != record.kind:
            mismatched.append("kind")
        if stub.creator != record.creator:
            mismatched.append("creator")
        if stub.stub_specialization != record.specialization:
            mismatched.append("specialization")
        if stub.created_at != record.created_at:
            mismatched.append("created_at")
        if mismatched:
            self._diagnostics.append(
                {"issue": "stub_mismatch", "thread": record.id, "fields": mismatched}
            )

    # -- LWW fields ------------------------------------------------------

    def _lww(self, table: dict, key, at: HlcTimestamp, *value) -> None:
        prior = table.get(key)
        entry = (_at_key(at),) + value
        if prior is None or entry[0] > prior[0]:
            table[key] = entry

    def membership_changed(self, ev: Event) -> None:
        key = (ev.payload["group"], ev.payload["doctor"])
        self._lww(self._member_lww, key, ev.at, bool(ev.payload["member"]))

    def edge_changed(self, ev: Event, present: bool) -> None:
        key = (ev.payload["from"], ev.payload["to"])
        self._lww(self._edge_lww, key, ev.at, present)

    def status_changed(self, ev: Event) -> bool:
        thread_id = ev.payload["thread"]
        if thread_id not in self._thread_base:
            return False
        self._lww(self._status_lww, thread_id, ev.at, ev.payload["status"], ev.payload.get("kind"))
        return True

    # -- append-only conversational state --------------------------------

    def message_added(self, ev: Event) -> bool:
        message = Message.from_dict(ev.payload["message"])
        if message.thread not in self._thread_base:
            return False
        slot = self._messages.setdefault(message.thread, {})
        entry = (_at_key(message.at), json.dumps(message.to_dict(), sort_keys=True), message)
        prior = slot.get(message.id)
        if prior is None or entry[:2] < prior[:2]:
            slot[message.id] = entry
        return True

    def assignment_added(self, ev: Event) -> bool:
        thread_id = ev.payload["thread"]
        if thread_id not in self._thread_base:
            return False
        assignment = Assignment.from_dict(ev.payload["assignment"])
        dedup = json.dumps(assignment.to_dict(), sort_keys=True)
        self._assignments.setdefault(thread_id, {}).setdefault(dedup, assignment)
        return True

    # -- stubs -------------------------------------------------------------

    def seed_stub(self, notice: StubNotice) -> None:
        if notice.thread in self._thread_base:
            return
        self._thread_base[notice.thread] = Thread(
            id=notice.thread,
            kind=notice.kind,
            creator=notice.creator,
            created_at=notice.at,
            stub=True,
            stub_specialization=notice.specialization,
        )

    # -- driver -----------------------------------------------------------

    def _feed_one(self, ev: Event) -> bool:
        """Apply one event; False means parked (missing thread reference)."""
        try:
            if ev.kind == "UserCreated":
                self.user_created(ev)
            elif ev.kind == "HospitalCreated":
                self.hospital_created(ev)
            elif ev.kind == "GroupCreated":
                self.group_created(ev)
            elif ev.kind == "ThreadCreated":
                self.thread_created(ev)
            elif ev.kind == "MembershipChanged":
                self.membership_changed(ev)
            elif ev.kind == "EdgeAdded":
                self.edge_changed(ev, True)
            elif ev.kind == "EdgeRemoved":
                self.edge_changed(ev, False)
            elif ev.kind == "StatusChanged":
                return self.status_changed(ev)
            elif ev.kind == "MessageAdded":
                return self.message_added(ev)
            elif ev.kind == "AssignmentAdded":
                return self.assignment_added(ev)
        except (KeyError, TypeError, ValueError) as exc:
            # commit() validates local payloads, but a peer may relay junk;
            # one corrupt event must not poison the whole replica. Folds
            # parse before they mutate, so skipping here leaves no residue.
            self._diagnostics.append(
                {"issue": "malformed_event", "event": list(ev.key), "kind": ev.kind, "error": str(exc)}
            )
        return True

    def feed_batch(self, events: Iterable[Event]) -> None:
        pending = sorted(events, key=canonical_order_key)
        pending.extend(self._parked)
        while pending:
            parked = []
            for ev in pending:
                if not self._feed_one(ev):
                    parked.append(ev)
            if len(parked) == len(pending):
                break
            pending = parked
        self._parked = pending

    def finish(self) -> Snapshot:
        """Materialize a fresh Snapshot; the builder stays reusable."""
        snap = Snapshot(
            doctors=dict(self._doctors),
            hospitals=dict(self._hospitals),
            credentials={k: dict(v) for k, v in self._credentials.items()},
        )
        members: Dict[str, Set[str]] = {g: set() for g in self._groups}
        for (group_id, doctor_id), (_, member) in self._member_lww.items():
            if member and group_id in members:
                members[group_id].add(doctor_id)
        snap.groups = {
            gid: replace(g, members=members[gid]) for gid, g in self._groups.items()
        }
        snap.edges = {key for key, (_, present) in self._edge_lww.items() if present}
        for thread_id, base in self._thread_base.items():
            status, kind = base.status, base.kind
            entry = self._status_lww.get(thread_id)
            if entry is not None:
                _, status, kind_override = entry
                kind = kind_override if kind_override is not None else base.kind
            msgs = [
                e[2]
                for e in sorted(self._messages.get(thread_id, {}).values(), key=lambda e: e[:2])
            ]
            assigns = sorted(
                self._assignments.get(thread_id, {}).items(),
                key=lambda kv: (_at_key(kv[1].at), kv[0]),
            )
            snap.threads[thread_id] = replace(
                base,
                status=status,
                kind=kind,
                messages=msgs,
                assignments=[a for _, a in assigns],
            )
        snap.diagnostics = [dict(d) for d in self._diagnostics]
        for ev in self._parked:
            snap.diagnostics.append(
                {"issue": "parked", "origin": ev.origin, "seq": ev.seq, "kind": ev.kind}
            )
        snap.diagnostics.sort(key=lambda d: json.dumps(d, sort_keys=True))
        return snap


def materialize(events: Iterable[Event], stubs: Iterable[StubNotice] = ()) -> Snapshot:
    """Fold an event set (plus stub notices) into a Snapshot.

    Pure function of the inputs as sets; any permutation or batching of
    ``events`` yields an identical result.
    """
    builder = StateBuilder()
    for notice in sorted(stubs, key=lambda n: (n.thread, _at_key(n.at))):
        builder.seed_stub(notice)
    builder.feed_batch(events)
    return builder.finish()


def _thread_doc(thread: Thread) -> dict:
    doc = thread.to_dict()
    doc["messages"] = [m.to_dict() for m in thread.messages]
    return doc


def canonical_state(snapshot: Snapshot) -> dict:
    """Replicated state only, fully ordered; equal digests serialize equal."""
    return {
        "doctors": {d.id: d.to_dict() for d in snapshot.doctors.values()},
        "credentials": {k: dict(v) for k, v in snapshot.credentials.items()},
        "hospitals": {h.id: h.to_dict() for h in snapshot.hospitals.values()},
        "groups": {g.id: g.to_dict() for g in snapshot.groups.values()},
        "edges": sorted(list(e) for e in snapshot.edges),
        "threads": {t.id: _thread_doc(t) for t in snapshot.threads.values() if not t.stub},
    }


def canonical_state_bytes(snapshot: Snapshot) -> bytes:
    return json.dumps(canonical_state(snapshot), sort_keys=True, separators=(",", ":")).encode("utf-8")


def state_hash(snapshot: Snapshot) -> str:
    return hashlib.sha256(canonical_state_bytes(snapshot)).hexdigest()

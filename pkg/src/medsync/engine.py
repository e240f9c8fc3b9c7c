"""Per-server replication engine: locally synchronous, globally asynchronous.

Every server owns an append-only event log. Commits are local-only (no
network), stamped by a hybrid logical clock, and durable before they are
acknowledged. Convergence happens by anti-entropy: peers exchange version
vectors, then exactly the missing events, in both directions. Out-of-order
arrivals wait in a bounded per-origin gap buffer until the gap fills.
"""

from __future__ import annotations

import copy
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Callable, ContextManager, Dict, List, Optional, Protocol

from .events import Event, VersionVector, validate_event_shape
from .hlc import HlcTimestamp, HybridLogicalClock, wall_clock_ms
from .model import (
    THREAD_KINDS,
    THREAD_STATUSES,
    Assignment,
    Doctor,
    Group,
    Hospital,
    Message,
    Thread,
    Violation,
    validate_case_form,
    validate_group,
    validate_hierarchy,
)
from .eventlog import MemoryLog
from .state import Snapshot, StateBuilder, state_hash
from .stubs import StubNotice

PROTOCOL_VERSION = 1
RETRY_BASE_MS = 30_000  # 30 s
RETRY_CAP_MS = 30 * 60_000  # 30 min
DEFAULT_STALENESS_MS = 24 * 3600 * 1000
DEFAULT_GAP_BUFFER_LIMIT = 10_000


class EngineError(Exception):
    pass


class CommitValidationError(EngineError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DuplicateIdError(CommitValidationError):
    pass


class GapBufferOverflowError(EngineError):
    pass


class TransportError(EngineError):
    pass


class ProtocolMismatchError(TransportError):
    pass


@dataclass
class SyncStatus:
    peer: str
    last_success_ms: int
    stale: bool = False
    consecutive_failures: int = 0
    next_retry_ms: int = 0


@dataclass
class SyncResult:
    ok: bool
    sent: int = 0
    received: int = 0
    duration_ms: int = 0
    error: Optional[str] = None


@dataclass
class DigestReply:
    vv: VersionVector
    events: List[Event] = field(default_factory=list)


class SyncTransport(Protocol):
    """One sync round's view of a peer; raises TransportError when unreachable."""

    def exchange_digest(self, vv: VersionVector) -> DigestReply: ...

    def push_delta(self, events: List[Event]) -> int: ...


class LoopbackTransport:
    """Direct in-process transport to another engine (tests, simulation)."""

    def __init__(self, peer: "ReplicationEngine"):
        self.peer = peer

    def exchange_digest(self, vv: VersionVector) -> DigestReply:
        return self.peer.handle_digest(vv)

    def push_delta(self, events: List[Event]) -> int:
        return self.peer.handle_delta(events)


class ReplicationEngine:
    def __init__(
        self,
        server_id: str,
        log=None,
        now_ms: Callable[[], int] = wall_clock_ms,
        gap_buffer_limit: int = DEFAULT_GAP_BUFFER_LIMIT,
        staleness_threshold_ms: int = DEFAULT_STALENESS_MS,
    ):
        self.server_id = server_id
        self._now_ms = now_ms
        self.clock = HybridLogicalClock(server_id, now_ms)
        self._log = log if log is not None else MemoryLog()
        self._gap_buffer_limit = gap_buffer_limit
        self.staleness_threshold_ms = staleness_threshold_ms
        self._by_origin: Dict[str, List[Event]] = {}
        self._vv: VersionVector = {}
        self._gap_buffer: Dict[str, Dict[int, Event]] = {}
        self._stubs: Dict[str, StubNotice] = {}
        self._peers: Dict[str, SyncStatus] = {}
        self._apply_hooks: List[Callable[[List[Event], Snapshot], None]] = []
        self._staleness_hooks: List[Callable[[str, bool, int], None]] = []
        self._stub_channels: List[Callable[[bytes], None]] = []
        self._builder = StateBuilder()
        self._snapshot_cache: Optional[Snapshot] = None
        self._snapshot_cache_key = None
        self._applied_total = 0
        recovered = list(self._log)
        for ev in recovered:
            self._index(ev)
            self.clock.observe(ev.at)
        self._builder.feed_batch(recovered)

    # -- bookkeeping -------------------------------------------------------

    def _index(self, ev: Event) -> None:
        run = self._by_origin.setdefault(ev.origin, [])
        run.append(ev)
        self._vv[ev.origin] = ev.seq
        self._applied_total += 1

    def _cache_key(self) -> tuple:
        return (self._applied_total, len(self._stubs))

    @property
    def applied_total(self) -> int:
        return self._applied_total

    def snapshot(self) -> Snapshot:
        key = self._cache_key()
        if self._snapshot_cache is None or self._snapshot_cache_key != key:
            self._snapshot_cache = self._builder.finish()
            self._snapshot_cache_key = key
        return self._snapshot_cache

    def all_events(self) -> List[Event]:
        out: List[Event] = []
        for origin in self._by_origin:
            out.extend(self._by_origin[origin])
        return out

    def state_hash(self) -> str:
        return state_hash(self.snapshot())

    def add_apply_hook(self, hook: Callable[[List[Event], Snapshot], None]) -> None:
        self._apply_hooks.append(hook)

    def add_staleness_hook(self, hook: Callable[[str, bool, int], None]) -> None:
        self._staleness_hooks.append(hook)

    def attach_stub_channel(self, send: Callable[[bytes], None]) -> None:
        self._stub_channels.append(send)

    def _fire_apply_hooks(self, events: List[Event]) -> None:
        if not self._apply_hooks or not events:
            return
        snap = self.snapshot()
        for hook in self._apply_hooks:
            hook(events, snap)

    # -- commit --------------------------------------------------------------

    def commit(self, kind: str, payload: dict) -> Event:
        """Append one locally authored event; durable before return.

        Never touches the network: full interactivity during outages is a
        structural property of this method.
        """
        stamp = self.clock.tick()
        payload = _normalize_payload(kind, copy.deepcopy(payload), stamp)
        violations = validate_commit_payload(kind, payload, self.snapshot())
        if violations:
            if any("already exists" in v.rule for v in violations):
                raise DuplicateIdError(violations)
            raise CommitValidationError(violations)
        seq = self._vv.get(self.server_id, 0) + 1
        ev = Event(origin=self.server_id, seq=seq, at=stamp, kind=kind, payload=payload)
        self._log.append(ev)  # storage failure raises here: seq not consumed
        self._index(ev)
        self._builder.feed_batch([ev])
        if kind == "ThreadCreated" and self._stub_channels:
            self._broadcast_stub(ev)
        self._fire_apply_hooks([ev])
        return ev

    def _broadcast_stub(self, ev: Event) -> None:
        wire = self.emit_stub(ev).to_wire()
        for send in self._stub_channels:
            try:
                send(wire)
            except Exception:
                pass  # the stub channel is best-effort by contract

    # -- anti-entropy ----------------------------------------------------------

    def digest(self) -> VersionVector:
        return dict(self._vv)

    def delta_since(self, peer_vv: VersionVector) -> List[Event]:
        out: List[Event] = []
        for origin in sorted(self._by_origin):
            known = peer_vv.get(origin, 0)
            run = self._by_origin[origin]
            if known < len(run):
                out.extend(run[known:])
        return out

    def apply(self, events: List[Event]) -> int:
        """Apply remote events; contiguous per origin, idempotent, gap-buffered."""
        applied: List[Event] = []
        try:
            for ev in events:
                validate_event_shape(ev)
                self.clock.observe(ev.at)
                have = self._vv.get(ev.origin, 0)
                if ev.seq <= have:
                    continue
                if ev.seq == have + 1:
                    self._log.append(ev)
                    self._index(ev)
                    applied.append(ev)
                    applied.extend(self._drain_gap(ev.origin))
                else:
                    buf = self._gap_buffer.setdefault(ev.origin, {})
                    buf[ev.seq] = ev
                    if len(buf) > self._gap_buffer_limit:
                        raise GapBufferOverflowError(
                            f"gap buffer for origin {ev.origin!r} exceeds "
                            f"{self._gap_buffer_limit} events; operator intervention required"
                        )
        finally:
            # a mid-batch error must not leave the snapshot behind the log
            self._builder.feed_batch(applied)
            self._fire_apply_hooks(applied)
        return len(applied)

    def _drain_gap(self, origin: str) -> List[Event]:
        drained: List[Event] = []
        buf = self._gap_buffer.get(origin)
        if not buf:
            return drained
        nxt = self._vv[origin] + 1
        while nxt in buf:
            ev = buf.pop(nxt)
            self._log.append(ev)
            self._index(ev)
            drained.append(ev)
            nxt += 1
        if not buf:
            self._gap_buffer.pop(origin, None)
        return drained

    def gap_buffer_size(self, origin: Optional[str] = None) -> int:
        if origin is not None:
            return len(self._gap_buffer.get(origin, ()))
        return sum(len(b) for b in self._gap_buffer.values())

    # -- handlers for the passive side of a round -------------------------------

    def handle_digest(self, peer_vv: VersionVector) -> DigestReply:
        return DigestReply(vv=self.digest(), events=self.delta_since(peer_vv))

    def handle_delta(self, events: List[Event]) -> int:
        return self.apply(events)

    # -- sync rounds ------------------------------------------------------------

    def register_peer(self, peer_id: str) -> SyncStatus:
        if peer_id not in self._peers:
            self._peers[peer_id] = SyncStatus(peer=peer_id, last_success_ms=self._now_ms())
        return self._peers[peer_id]

    def peer_status(self, peer_id: str) -> SyncStatus:
        return self._peers[peer_id]

    def sync_statuses(self) -> Dict[str, SyncStatus]:
        return dict(self._peers)

    def sync_round(
        self, peer_id: str, transport: SyncTransport, lock: Optional[ContextManager] = None
    ) -> SyncResult:
        """One bidirectional digest/delta exchange with a peer.

        Pushes the outbound delta before applying the inbound one, so a
        transport failure leaves replicated state untouched (only retry
        bookkeeping changes).

        ``lock`` serializes this engine against concurrent local commits
        (e.g. the API server's request handlers). It is held only around
        local reads/writes, never across a transport call: two servers
        whose rounds fire simultaneously would otherwise each sit on their
        own lock while waiting on the other's blocked handler.
        """
        guard = lock if lock is not None else nullcontext()
        with guard:
            status = self.register_peer(peer_id)
            local_vv = self.digest()
        t0 = self._now_ms()
        try:
            reply = transport.exchange_digest(local_vv)
            with guard:
                outbound = self.delta_since(reply.vv)
            if outbound:
                transport.push_delta(outbound)
            with guard:
                received = self.apply(reply.events)
        except TransportError as exc:
            with guard:
                status.consecutive_failures += 1
                delay = min(RETRY_BASE_MS * (2 ** (status.consecutive_failures - 1)), RETRY_CAP_MS)
                status.next_retry_ms = self._now_ms() + delay
            return SyncResult(ok=False, duration_ms=self._now_ms() - t0, error=str(exc))
        with guard:
            now = self._now_ms()
            status.last_success_ms = now
            status.consecutive_failures = 0
            status.next_retry_ms = 0
            if status.stale:
                status.stale = False
                for hook in self._staleness_hooks:
                    hook(peer_id, False, now)
        return SyncResult(ok=True, sent=len(outbound), received=received, duration_ms=now - t0)

    def staleness_check(self, now_ms: Optional[int] = None, threshold_ms: Optional[int] = None) -> Dict[str, bool]:
        """Flag peers we have not synchronized with for longer than the threshold."""
        now = self._now_ms() if now_ms is None else now_ms
        threshold = self.staleness_threshold_ms if threshold_ms is None else threshold_ms
        if threshold <= 0:
            raise ValueError("staleness threshold must be positive")
        flags: Dict[str, bool] = {}
        for peer_id, status in self._peers.items():
            stale = (now - status.last_success_ms) > threshold
            if stale != status.stale:
                status.stale = stale
                for hook in self._staleness_hooks:
                    hook(peer_id, stale, now)
            flags[peer_id] = stale
        return flags

    def overall_stale(self) -> bool:
        """True when the server has not synchronized with any peer in time."""
        if not self._peers:
            return False
        return all(s.stale for s in self._peers.values())

    # -- stub side channel ---------------------------------------------------------

    def emit_stub(self, ev: Event) -> StubNotice:
        if ev.kind != "ThreadCreated":
            raise EngineError("stub notices are emitted for ThreadCreated events only")
        thread = ev.payload["thread"]
        form = thread.get("case_form") or {}
        notice = StubNotice(
            thread=thread["id"],
            kind=thread["kind"],
            creator=thread["creator"],
            specialization=form.get("specialization_requested"),
            at=ev.at,
        )
        notice.to_wire()  # oversize notices rejected at emit
        return notice

    def ingest_stub(self, notice: StubNotice) -> None:
        snap = self.snapshot()
        existing = snap.threads.get(notice.thread)
        if existing is not None and not existing.stub:
            return  # full record already known: no-op
        if notice.thread in self._stubs:
            return
        self._stubs[notice.thread] = notice
        self._builder.seed_stub(notice)
        self._snapshot_cache = None

    def ingest_stub_wire(self, wire: bytes) -> None:
        self.ingest_stub(StubNotice.from_wire(wire))

    def stub_notices(self) -> List[StubNotice]:
        return list(self._stubs.values())


def _normalize_payload(kind: str, payload: dict, stamp: HlcTimestamp) -> dict:
    """Fill commit-time timestamps so embedded times always match the stamp."""
    if kind == "ThreadCreated":
        payload["thread"]["created_at"] = stamp.encode()
        payload["thread"].setdefault("status", "open")
        payload["thread"]["stub"] = False
        payload["thread"]["assignments"] = []
    elif kind == "MessageAdded":
        payload["message"]["at"] = stamp.encode()
    elif kind == "AssignmentAdded":
        payload["assignment"]["at"] = stamp.encode()
    return payload


def _thread_known(snap: Snapshot, thread_id: str) -> bool:
    return thread_id in snap.threads  # stubs included by design


def validate_commit_payload(kind: str, payload: dict, snap: Snapshot) -> List[Violation]:
    """Domain validation for locally authored events.

    Remote events are not re-validated here: apply() is permissive and the
    materializer parks whatever it cannot yet resolve.
    """
    v: List[Violation] = []
    try:
        if kind == "UserCreated":
            doctor = Doctor.from_dict(payload["doctor"])
            if doctor.id in snap.doctors:
                v.append(Violation(doctor.id, "doctor id already exists"))
            if doctor.hospital not in snap.hospitals:
                v.append(Violation(doctor.id, "hospital references an unknown hospital"))
        elif kind == "HospitalCreated":
            hospital = Hospital.from_dict(payload["hospital"])
            if hospital.id in snap.hospitals:
                v.append(Violation(hospital.id, "hospital id already exists"))
            else:
                combined = list(snap.hospitals.values()) + [hospital]
                prior = {(x.subject, x.rule) for x in validate_hierarchy(snap.hospitals.values())}
                v.extend(x for x in validate_hierarchy(combined) if (x.subject, x.rule) not in prior)
        elif kind == "GroupCreated":
            group = Group.from_dict(payload["group"])
            if group.id in snap.groups:
                v.append(Violation(group.id, "group id already exists"))
            v.extend(validate_group(group))
        elif kind == "MembershipChanged":
            if payload["doctor"] not in snap.doctors:
                v.append(Violation(payload["doctor"], "unknown doctor"))
            if payload["group"] not in snap.groups:
                v.append(Violation(payload["group"], "unknown group"))
        elif kind in ("EdgeAdded", "EdgeRemoved"):
            frm, to = payload["from"], payload["to"]
            if frm == to:
                v.append(Violation(frm, "colleague edges must not be self-edges"))
            for d in (frm, to):
                if d not in snap.doctors:
                    v.append(Violation(d, "unknown doctor"))
        elif kind == "ThreadCreated":
            thread = Thread.from_dict(payload["thread"])
            if thread.id in snap.threads:
                v.append(Violation(thread.id, "thread id already exists"))
            if thread.creator not in snap.doctors:
                v.append(Violation(thread.creator, "unknown creator"))
            v.extend(validate_case_form(thread.case_form, thread.kind))
        elif kind == "MessageAdded":
            message = Message.from_dict(payload["message"])
            if not _thread_known(snap, message.thread):
                v.append(Violation(message.thread, "unknown thread"))
            if message.author not in snap.doctors:
                v.append(Violation(message.author, "unknown author"))
        elif kind == "AssignmentAdded":
            if not _thread_known(snap, payload["thread"]):
                v.append(Violation(payload["thread"], "unknown thread"))
            assignment = Assignment.from_dict(payload["assignment"])
            target = assignment.target
            if target.kind == "doctor" and target.doctor not in snap.doctors:
                v.append(Violation(str(target.doctor), "unknown doctor target"))
            elif target.kind == "group" and target.group not in snap.groups:
                v.append(Violation(str(target.group), "unknown group target"))
            elif target.kind == "department":
                hospital = snap.hospitals.get(target.hospital or "")
                if hospital is None:
                    v.append(Violation(str(target.hospital), "unknown hospital target"))
                elif target.specialty not in hospital.departments:
                    v.append(
                        Violation(
                            str(target.hospital),
                            f"department {target.specialty!r} not offered by hospital",
                        )
                    )
        elif kind == "StatusChanged":
            thread = snap.threads.get(payload["thread"])
            if thread is None:
                v.append(Violation(payload["thread"], "unknown thread"))
            if payload["status"] not in THREAD_STATUSES:
                v.append(Violation(payload["thread"], f"unknown status {payload['status']!r}"))
            new_kind = payload.get("kind")
            if new_kind is not None and new_kind not in THREAD_KINDS:
                v.append(Violation(payload["thread"], f"unknown kind {new_kind!r}"))
        else:
            v.append(Violation(kind, "unknown event kind"))
    except (KeyError, TypeError, ValueError) as exc:
        v.append(Violation(kind, f"malformed payload: {exc}"))
    return v

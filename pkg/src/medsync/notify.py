"""Email/SMS notification fan-out with retry and per-event dedup.

Each server notifies only its locally homed users, so a thread replicated
to five servers still produces one SMS per recipient. Job identity is
(recipient, channel, event), which makes delivery exactly-once no matter
how many times the same event flows past during anti-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Protocol, Set, Tuple

from .events import Event
from .model import Doctor, Thread, _thread_in_user_groups, _thread_is_primary
from .state import Snapshot

CHANNELS = ("email", "sms")
SCOPES = ("primary_only", "primary_and_other")
SMS_LIMIT = 160
RETRY_BASE_MS = 60_000  # 1 min
RETRY_CAP_MS = 3_600_000  # 1 h
MAX_ATTEMPTS = 10

NOTIFIABLE_KINDS = ("ThreadCreated", "MessageAdded", "AssignmentAdded")


@dataclass(frozen=True)
class WatchPreference:
    doctor: str
    scope: str = "primary_only"
    channels: Tuple[str, ...] = ("email",)

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ValueError(f"unknown scope {self.scope!r}")
        if not self.channels:
            raise ValueError("at least one channel required when notifications are enabled")
        for c in self.channels:
            if c not in CHANNELS:
                raise ValueError(f"unknown channel {c!r}")


@dataclass
class NotificationJob:
    id: str
    recipient: str
    channel: str
    event: Tuple[str, int]  # (origin, seq)
    body: str
    reason: str
    state: str = "queued"  # queued | sent | failed
    attempts: int = 0
    next_attempt_ms: int = 0
    error: Optional[str] = None


class NotificationTransport(Protocol):
    def send(self, address: str, body: str) -> str:
        """Returns 'ok', 'retryable', or 'permanent'."""
        ...


class MemoryTransport:
    """Records deliveries; scriptable failures for retry tests."""

    def __init__(self, outcomes: Optional[Iterable[str]] = None):
        self.delivered: List[Tuple[str, str]] = []
        self._outcomes = list(outcomes or [])

    def send(self, address: str, body: str) -> str:
        if self._outcomes:
            outcome = self._outcomes.pop(0)
            if outcome != "ok":
                return outcome
        self.delivered.append((address, body))
        return "ok"


def event_author(ev: Event) -> Optional[str]:
    if ev.kind == "ThreadCreated":
        return ev.payload["thread"]["creator"]
    if ev.kind == "MessageAdded":
        return ev.payload["message"]["author"]
    if ev.kind == "AssignmentAdded":
        return ev.payload["assignment"]["assigned_by"]
    return None


def event_thread_id(ev: Event) -> Optional[str]:
    if ev.kind == "ThreadCreated":
        return ev.payload["thread"]["id"]
    if ev.kind == "MessageAdded":
        return ev.payload["message"]["thread"]
    if ev.kind in ("AssignmentAdded", "StatusChanged"):
        return ev.payload["thread"]
    return None


def recipients_for_event(
    ev: Event,
    snap: Snapshot,
    homed: Iterable[str],
    prefs: Dict[str, WatchPreference],
) -> Set[Tuple[str, str]]:
    """(doctor, reason) pairs to notify for one applied event.

    Primary-case watchers are always notified; "other" watchers only when
    they opted into primary_and_other. The author never notifies herself.
    """
    if ev.kind not in NOTIFIABLE_KINDS:
        return set()
    thread = snap.threads.get(event_thread_id(ev) or "")
    if thread is None:
        return set()
    author = event_author(ev)
    out: Set[Tuple[str, str]] = set()
    for doctor_id in homed:
        if doctor_id == author:
            continue
        user = snap.doctors.get(doctor_id)
        if user is None:
            continue
        if _thread_is_primary(thread, user):
            out.add((doctor_id, "primary"))
            continue
        pref = prefs.get(doctor_id, WatchPreference(doctor_id))
        if pref.scope != "primary_and_other":
            continue
        if thread.stub or _thread_in_user_groups(thread, doctor_id, snap.groups):
            out.add((doctor_id, "other"))
    return out


def _clip(text: str, limit: int) -> str:
    if len(text) <= limit:
        return text
    return text[: limit - 1] + "…"


def render(ev: Event, snap: Snapshot, channel: str) -> str:
    """Deterministic notification text; SMS stays under 160 chars and never
    carries clinical narrative."""
    thread = snap.threads.get(event_thread_id(ev) or "")
    kind = thread.kind if thread is not None else "case"
    spec = thread.specialization if thread is not None else None
    label = f"{spec} {kind}" if spec else kind
    hospital = ""
    if thread is not None:
        creator = snap.doctors.get(thread.creator)
        if creator is not None:
            h = snap.hospitals.get(creator.hospital)
            hospital = h.name if h is not None else creator.hospital
    tid = event_thread_id(ev)
    if ev.kind == "ThreadCreated":
        text = f"New {label}"
        if hospital:
            text += f" from {hospital}"
    elif ev.kind == "MessageAdded":
        author = snap.doctors.get(ev.payload["message"]["author"])
        who = author.display_name if author is not None else ev.payload["message"]["author"]
        text = f"New message from {who} on {label}"
    elif ev.kind == "AssignmentAdded":
        text = f"{label.capitalize()} routed for review"
        if hospital:
            text += f" ({hospital})"
    else:
        text = f"Update on {label}"
    text += f". Log in to view case {tid}."
    if channel == "sms":
        return _clip(text, SMS_LIMIT)
    if ev.kind == "MessageAdded" and thread is not None:
        # Email may carry a short body excerpt; SMS never does.
        body = ev.payload["message"].get("body") or ""
        if body:
            text += f"\n\n{_clip(body, 500)}"
    return text


def render_staleness(peer: str, stale: bool, threshold_hours: float) -> str:
    if stale:
        return (
            f"Sync warning: no successful exchange with {peer} for over "
            f"{threshold_hours:g} h. Remote updates may be missing."
        )
    return f"Sync restored: exchange with {peer} succeeded. Case lists are catching up."


class Dispatcher:
    """Queue fed by the engine's apply hook; pump() drives deliveries.

    Lanes are FIFO per (recipient, channel): a retrying job blocks later
    jobs on the same lane, preserving per-recipient ordering.
    """

    def __init__(
        self,
        homed: Iterable[str],
        transports: Dict[str, NotificationTransport],
        prefs: Optional[Dict[str, WatchPreference]] = None,
        now_ms=None,
        staleness_threshold_hours: float = 24.0,
    ):
        self.homed = list(homed)
        self.transports = dict(transports)
        self.prefs: Dict[str, WatchPreference] = dict(prefs or {})
        self._now_ms = now_ms if now_ms is not None else (lambda: 0)
        self.staleness_threshold_hours = staleness_threshold_hours
        self.jobs: List[NotificationJob] = []
        self._seen: Set[Tuple[str, str, Tuple[str, int]]] = set()
        self._lanes: Dict[Tuple[str, str], List[NotificationJob]] = {}
        self._counter = 0

    # -- enqueue -------------------------------------------------------------

    def set_preference(self, pref: WatchPreference) -> None:
        self.prefs[pref.doctor] = pref

    def _enqueue(self, recipient: str, channel: str, event_key: Tuple[str, int], body: str, reason: str) -> Optional[NotificationJob]:
        dedup = (recipient, channel, event_key)
        if dedup in self._seen:
            return None
        self._seen.add(dedup)
        self._counter += 1
        job = NotificationJob(
            id=f"n{self._counter}",
            recipient=recipient,
            channel=channel,
            event=event_key,
            body=body,
            reason=reason,
        )
        self.jobs.append(job)
        self._lanes.setdefault((recipient, channel), []).append(job)
        return job

    def on_events(self, events: List[Event], snap: Snapshot) -> None:
        """Engine apply hook: events are durably applied before we see them."""
        for ev in events:
            for recipient, reason in sorted(recipients_for_event(ev, snap, self.homed, self.prefs)):
                pref = self.prefs.get(recipient, WatchPreference(recipient))
                for channel in pref.channels:
                    if channel not in self.transports:
                        continue
                    body = render(ev, snap, channel)
                    self._enqueue(recipient, channel, ev.key, body, reason)

    def on_staleness(self, peer: str, stale: bool, now_ms: int) -> None:
        body = render_staleness(peer, stale, self.staleness_threshold_hours)
        key = (f"staleness/{peer}/{'stale' if stale else 'fresh'}", now_ms)
        for recipient in self.homed:
            pref = self.prefs.get(recipient, WatchPreference(recipient))
            for channel in pref.channels:
                if channel not in self.transports:
                    continue
                text = _clip(body, SMS_LIMIT) if channel == "sms" else body
                self._enqueue(recipient, channel, key, text, "staleness")

    # -- delivery --------------------------------------------------------------

    def _address(self, snap_doctor: Optional[Doctor], channel: str) -> Optional[str]:
        if snap_doctor is None:
            return None
        if channel == "email":
            return snap_doctor.contact.email
        return snap_doctor.contact.phone

    def dispatch(self, job: NotificationJob, address: Optional[str]) -> NotificationJob:
        if job.state != "queued":
            return job  # re-dispatch of a finished job is a no-op
        transport = self.transports[job.channel]
        job.attempts += 1
        if address is None:
            job.state = "failed"
            job.error = "no address on file"
            return job
        try:
            outcome = transport.send(address, job.body)
        except Exception as exc:
            outcome = "retryable"
            job.error = str(exc)
        if outcome == "ok":
            job.state = "sent"
            job.error = None
        elif outcome == "permanent":
            job.state = "failed"
            job.error = job.error or "permanent address failure"
        else:
            if job.attempts >= MAX_ATTEMPTS:
                job.state = "failed"
                job.error = job.error or "retry budget exhausted"
            else:
                delay = min(RETRY_BASE_MS * (2 ** (job.attempts - 1)), RETRY_CAP_MS)
                job.next_attempt_ms = self._now_ms() + delay
        return job

    def pump(self, snap: Snapshot, now_ms: Optional[int] = None) -> int:
        """Attempt every due job at the head of its lane; returns sends."""
        now = self._now_ms() if now_ms is None else now_ms
        sent = 0
        for lane in list(self._lanes.values()):
            while lane:
                job = lane[0]
                if job.state != "queued":
                    lane.pop(0)
                    continue
                if job.next_attempt_ms > now:
                    break
                address = self._address(snap.doctors.get(job.recipient), job.channel)
                self.dispatch(job, address)
                if job.state == "sent":
                    sent += 1
                if job.state == "queued":
                    break  # retrying: keep lane order
                lane.pop(0)
        return sent

    def pending(self) -> List[NotificationJob]:
        return [j for j in self.jobs if j.state == "queued"]

    def failed(self) -> List[NotificationJob]:
        return [j for j in self.jobs if j.state == "failed"]

    def sent(self) -> List[NotificationJob]:
        return [j for j in self.jobs if j.state == "sent"]

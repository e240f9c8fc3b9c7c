"""Colleague graph, group membership, and consultant selection.

Cases are routed by their authors through an explicit choice set shown
side by side: individual colleagues (out-neighbors in the directed
colleague graph), groups, and departmental contacts drawn from the
hospital referral chain. There is no mined recommendation ranking; the
orderings below exist only to keep the lists deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .engine import ReplicationEngine
from .events import Event
from .model import Doctor, Target, Thread, UnknownDoctorError
from .state import Snapshot


class RoutingError(Exception):
    pass


class AuthorizationError(RoutingError):
    pass


class EscalationError(RoutingError):
    pass


@dataclass(frozen=True)
class ColleagueCandidate:
    doctor: str
    name: str
    specialties: Tuple[str, ...]
    hospital: str
    country: str

    @classmethod
    def of(cls, d: Doctor) -> "ColleagueCandidate":
        return cls(
            doctor=d.id,
            name=d.display_name,
            specialties=tuple(sorted(d.specialties)),
            hospital=d.hospital,
            country=d.country,
        )


@dataclass
class CandidateSet:
    """The three routing lists, kept separate for side-by-side rendering."""

    colleagues: List[ColleagueCandidate] = field(default_factory=list)
    groups: List[str] = field(default_factory=list)
    departments: List[Tuple[str, str]] = field(default_factory=list)


def referral_chain(snap: Snapshot, hospital_id: str) -> List[str]:
    """Strict ancestors of a hospital, nearest tier first; cycle-safe."""
    chain: List[str] = []
    seen = {hospital_id}
    node = snap.hospitals.get(hospital_id)
    while node is not None and node.referral_parent is not None:
        parent = node.referral_parent
        if parent in seen:
            break
        chain.append(parent)
        seen.add(parent)
        node = snap.hospitals.get(parent)
    return chain


def candidate_consultants(snap: Snapshot, user: str, specialty: Optional[str] = None) -> CandidateSet:
    me = snap.doctors.get(user)
    if me is None:
        raise UnknownDoctorError(user)

    colleagues = []
    for peer_id in snap.out_neighbors(user):
        peer = snap.doctors.get(peer_id)
        if peer is None:
            continue
        if specialty is not None and specialty not in peer.specialties:
            continue
        colleagues.append(ColleagueCandidate.of(peer))
    colleagues.sort(key=lambda c: (c.country != me.country, c.name, c.doctor))

    def group_rank(g):
        matches = specialty is not None and g.kind == "specialty" and g.affiliation == specialty
        return (not matches, g.name, g.id)

    groups = [g.id for g in sorted(snap.groups.values(), key=group_rank)]

    departments: List[Tuple[str, str]] = []
    seen = set()
    for hospital_id in referral_chain(snap, me.hospital):
        hospital = snap.hospitals.get(hospital_id)
        if hospital is None:
            continue
        for dept in sorted(hospital.departments):
            pair = (hospital_id, dept)
            if pair not in seen:
                seen.add(pair)
                departments.append(pair)

    return CandidateSet(colleagues=colleagues, groups=groups, departments=departments)


def set_colleague(engine: ReplicationEngine, from_: str, to: str, present: bool) -> Event:
    kind = "EdgeAdded" if present else "EdgeRemoved"
    return engine.commit(kind, {"from": from_, "to": to})


def set_membership(engine: ReplicationEngine, doctor: str, group: str, member: bool) -> Event:
    return engine.commit("MembershipChanged", {"doctor": doctor, "group": group, "member": member})


def _is_assignee(snap: Snapshot, thread: Thread, actor: str) -> bool:
    me = snap.doctors.get(actor)
    for a in thread.assignments:
        t = a.target
        if t.kind == "doctor" and t.doctor == actor:
            return True
        if t.kind == "group":
            g = snap.groups.get(t.group or "")
            if g is not None and actor in g.members:
                return True
        if t.kind == "department" and me is not None:
            if t.hospital == me.hospital and t.specialty in me.specialties:
                return True
    return False


def assign_thread(engine: ReplicationEngine, thread_id: str, target: Target, actor: str) -> Event:
    snap = engine.snapshot()
    thread = snap.threads.get(thread_id)
    if thread is None:
        raise RoutingError(f"unknown thread {thread_id!r}")
    if actor != thread.creator and not _is_assignee(snap, thread, actor):
        raise AuthorizationError("only the creator or an existing assignee may re-route a case")
    payload = {
        "thread": thread_id,
        "assignment": {"target": target.to_dict(), "assigned_by": actor},
    }
    return engine.commit("AssignmentAdded", payload)


def escalate_thread(engine: ReplicationEngine, thread_id: str, actor: str) -> Event:
    """One-way consultation → referral; assignments and messages survive."""
    snap = engine.snapshot()
    thread = snap.threads.get(thread_id)
    if thread is None:
        raise RoutingError(f"unknown thread {thread_id!r}")
    if actor != thread.creator:
        raise AuthorizationError("only the creator may escalate a case")
    if thread.kind == "referral":
        raise EscalationError("thread is already a referral")
    if thread.kind != "consultation":
        raise EscalationError(f"{thread.kind} threads cannot escalate")
    payload = {"thread": thread_id, "status": "escalated", "kind": "referral"}
    return engine.commit("StatusChanged", payload)

"""Replicated domain entities and the pure rules defined over them.

Hospitals form a referral hierarchy (a forest of in-trees rooted at
teaching hospitals; private hospitals stand alone). Doctors hang off
hospitals and carry a directed colleague graph. Conversational threads
(consultations, discussions, referrals) are routed to doctors, groups, or
hospital departments, and each doctor's welcome screen splits threads into
"primary" and "other" buckets.

By design the schema carries no patient-identifying fields anywhere: case
forms hold an age band, a sex enum, free clinical history text, and a
requested specialization only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .hlc import HlcTimestamp

HOSPITAL_TIERS = ("teaching", "regional", "district", "clinic", "private")
PUBLIC_SUBORDINATE_TIERS = ("regional", "district", "clinic")
SENIORITIES = ("junior", "senior", "specialist")
GROUP_KINDS = ("specialty", "institution", "country", "professional_org")
THREAD_KINDS = ("consultation", "discussion", "referral")
THREAD_STATUSES = ("open", "escalated", "closed")
SEXES = ("female", "male", "unspecified")
AGE_BANDS = (
    "0-9", "10-19", "20-29", "30-39", "40-49",
    "50-59", "60-69", "70-79", "80-89", "90+",
)


class UnknownDoctorError(KeyError):
    pass


@dataclass(frozen=True)
class Violation:
    subject: str
    rule: str

    def __str__(self) -> str:
        return f"{self.subject}: {self.rule}"


@dataclass
class Hospital:
    id: str
    name: str
    tier: str
    region: str
    referral_parent: Optional[str] = None
    departments: frozenset = frozenset()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "tier": self.tier,
            "region": self.region,
            "referral_parent": self.referral_parent,
            "departments": sorted(self.departments),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hospital":
        return cls(
            id=d["id"],
            name=d["name"],
            tier=d["tier"],
            region=d["region"],
            referral_parent=d.get("referral_parent"),
            departments=frozenset(d.get("departments", ())),
        )


@dataclass
class Contact:
    email: Optional[str] = None
    phone: Optional[str] = None

    def to_dict(self) -> dict:
        return {"email": self.email, "phone": self.phone}

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "Contact":
        d = d or {}
        return cls(email=d.get("email"), phone=d.get("phone"))


@dataclass
class Doctor:
    id: str
    display_name: str
    hospital: str
    specialties: frozenset = frozenset()
    country: str = "GH"
    seniority: str = "senior"
    contact: Contact = field(default_factory=Contact)
    is_admin: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name,
            "hospital": self.hospital,
            "specialties": sorted(self.specialties),
            "country": self.country,
            "seniority": self.seniority,
            "contact": self.contact.to_dict(),
            "is_admin": self.is_admin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Doctor":
        return cls(
            id=d["id"],
            display_name=d["display_name"],
            hospital=d["hospital"],
            specialties=frozenset(d.get("specialties", ())),
            country=d.get("country", "GH"),
            seniority=d.get("seniority", "senior"),
            contact=Contact.from_dict(d.get("contact")),
            is_admin=bool(d.get("is_admin", False)),
        )


@dataclass
class Group:
    id: str
    name: str
    kind: str
    affiliation: Optional[str] = None
    members: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "kind": self.kind,
            "affiliation": self.affiliation,
            "members": sorted(self.members),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Group":
        return cls(
            id=d["id"],
            name=d["name"],
            kind=d["kind"],
            affiliation=d.get("affiliation"),
            members=set(d.get("members", ())),
        )


@dataclass(frozen=True)
class ColleagueEdge:
    """Directed: ``from_`` lists ``to`` as a colleague. No reciprocity implied."""

    from_: str
    to: str

    def to_dict(self) -> dict:
        return {"from": self.from_, "to": self.to}

    @classmethod
    def from_dict(cls, d: dict) -> "ColleagueEdge":
        return cls(from_=d["from"], to=d["to"])


@dataclass(frozen=True)
class Target:
    """Assignment destination: a doctor, a group, or a hospital department."""

    kind: str  # doctor | group | department
    doctor: Optional[str] = None
    group: Optional[str] = None
    hospital: Optional[str] = None
    specialty: Optional[str] = None

    @classmethod
    def to_doctor(cls, doctor_id: str) -> "Target":
        return cls(kind="doctor", doctor=doctor_id)

    @classmethod
    def to_group(cls, group_id: str) -> "Target":
        return cls(kind="group", group=group_id)

    @classmethod
    def to_department(cls, hospital_id: str, specialty: str) -> "Target":
        return cls(kind="department", hospital=hospital_id, specialty=specialty)

    def to_dict(self) -> dict:
        if self.kind == "doctor":
            return {"doctor": self.doctor}
        if self.kind == "group":
            return {"group": self.group}
        return {"department": {"hospital": self.hospital, "specialty": self.specialty}}

    @classmethod
    def from_dict(cls, d: dict) -> "Target":
        # client-supplied shape: refuse anything but plain string ids
        if not isinstance(d, dict):
            raise TypeError("target must be an object")
        if "doctor" in d:
            if not isinstance(d["doctor"], str):
                raise TypeError("doctor target must be a string id")
            return cls.to_doctor(d["doctor"])
        if "group" in d:
            if not isinstance(d["group"], str):
                raise TypeError("group target must be a string id")
            return cls.to_group(d["group"])
        dep = d["department"]
        if (
            not isinstance(dep, dict)
            or not isinstance(dep.get("hospital"), str)
            or not isinstance(dep.get("specialty"), str)
        ):
            raise TypeError("department target needs hospital and specialty ids")
        return cls.to_department(dep["hospital"], dep["specialty"])


@dataclass(frozen=True)
class Assignment:
    target: Target
    assigned_by: str
    at: HlcTimestamp

    def to_dict(self) -> dict:
        return {
            "target": self.target.to_dict(),
            "assigned_by": self.assigned_by,
            "at": self.at.encode(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Assignment":
        return cls(
            target=Target.from_dict(d["target"]),
            assigned_by=d["assigned_by"],
            at=HlcTimestamp.decode(d["at"]),
        )


@dataclass
class CaseForm:
    # Deliberately no name/address/identifier fields: non-identifying by schema.
    age_band: str = "unspecified"
    sex: str = "unspecified"
    clinical_history: str = ""
    specialization_requested: Optional[str] = None
    attachments: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "age_band": self.age_band,
            "sex": self.sex,
            "clinical_history": self.clinical_history,
            "specialization_requested": self.specialization_requested,
            "attachments": list(self.attachments),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaseForm":
        return cls(
            age_band=d.get("age_band", "unspecified"),
            sex=d.get("sex", "unspecified"),
            clinical_history=d.get("clinical_history", ""),
            specialization_requested=d.get("specialization_requested"),
            attachments=list(d.get("attachments", ())),
        )


@dataclass(frozen=True)
class Message:
    id: str
    thread: str
    author: str
    body: str
    attachments: tuple = ()
    at: HlcTimestamp = HlcTimestamp(0, 0, "")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "thread": self.thread,
            "author": self.author,
            "body": self.body,
            "attachments": list(self.attachments),
            "at": self.at.encode(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(
            id=d["id"],
            thread=d["thread"],
            author=d["author"],
            body=d["body"],
            attachments=tuple(d.get("attachments", ())),
            at=HlcTimestamp.decode(d["at"]),
        )


@dataclass(frozen=True)
class Attachment:
    id: str
    media_type: str
    byte_size: int
    content_hash: str  # sha-256 hex digest of the payload bytes
    payload_ref: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "media_type": self.media_type,
            "byte_size": self.byte_size,
            "content_hash": self.content_hash,
            "payload_ref": self.payload_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Attachment":
        return cls(
            id=d["id"],
            media_type=d["media_type"],
            byte_size=int(d["byte_size"]),
            content_hash=d["content_hash"],
            payload_ref=d["payload_ref"],
        )


@dataclass
class Thread:
    """A consultation, discussion, or referral conversation.

    ``messages`` is runtime state filled in by materialization; the fixture
    wire form carries only the fields named in the entity schema. A stub
    thread (``stub=True``) knows its id, kind, creator, and specialization
    but has no case form yet.
    """

    id: str
    kind: str
    creator: str
    created_at: HlcTimestamp
    case_form: Optional[CaseForm] = None
    assignments: list = field(default_factory=list)
    status: str = "open"
    stub: bool = False
    messages: list = field(default_factory=list)
    stub_specialization: Optional[str] = None

    @property
    def specialization(self) -> Optional[str]:
        if self.case_form is not None:
            return self.case_form.specialization_requested
        return self.stub_specialization

    @property
    def last_activity(self) -> HlcTimestamp:
        if self.messages:
            return max(self.created_at, max(m.at for m in self.messages))
        return self.created_at

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "creator": self.creator,
            "created_at": self.created_at.encode(),
            "case_form": self.case_form.to_dict() if self.case_form else None,
            "assignments": [a.to_dict() for a in self.assignments],
            "status": self.status,
            "stub": self.stub,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Thread":
        form = d.get("case_form")
        return cls(
            id=d["id"],
            kind=d["kind"],
            creator=d["creator"],
            created_at=HlcTimestamp.decode(d["created_at"]),
            case_form=CaseForm.from_dict(form) if form else None,
            assignments=[Assignment.from_dict(a) for a in d.get("assignments", ())],
            status=d.get("status", "open"),
            stub=bool(d.get("stub", False)),
        )


def validate_hierarchy(hospitals: Iterable[Hospital]) -> list:
    """Check the referral hierarchy invariants over a hospital set.

    Accepts exactly the sets whose referral graph is a forest of in-trees
    rooted at teaching hospitals plus isolated private hospitals. Violations
    are data, not errors: each names the offending hospital and the rule.
    """
    by_id = {h.id: h for h in hospitals}
    violations: list[Violation] = []

    for h in by_id.values():
        if h.tier == "teaching" and h.referral_parent is not None:
            violations.append(Violation(h.id, "teaching hospital must be a hierarchy root"))
        if h.tier == "private" and h.referral_parent is not None:
            violations.append(Violation(h.id, "private hospital must not join the referral hierarchy"))
        if h.referral_parent is not None and h.referral_parent not in by_id:
            violations.append(Violation(h.id, "referral_parent references an unknown hospital"))

    # Cycle detection over the parent graph; every hospital on a cycle is flagged.
    state: dict[str, int] = {}  # 0 visiting, 1 done
    for start in by_id:
        if start in state:
            continue
        path = []
        node: Optional[str] = start
        while node is not None and node in by_id and node not in state:
            state[node] = 0
            path.append(node)
            node = by_id[node].referral_parent
        if node is not None and node in by_id and state.get(node) == 0:
            cycle = path[path.index(node):]
            for hid in cycle:
                violations.append(Violation(hid, "referral chain forms a cycle"))
        for hid in path:
            state[hid] = 1

    for h in by_id.values():
        if h.tier not in PUBLIC_SUBORDINATE_TIERS:
            continue
        node, seen = h, set()
        ok = False
        while True:
            seen.add(node.id)
            parent = node.referral_parent
            if parent is None or parent not in by_id or parent in seen:
                break
            node = by_id[parent]
            if node.tier == "teaching":
                ok = True
                break
        if not ok:
            violations.append(Violation(h.id, "referral chain does not reach a teaching hospital"))

    return violations


def validate_case_form(form: Optional[CaseForm], kind: str) -> list:
    """Enforce the thread-kind/case-form pairing and form field rules."""
    violations: list[Violation] = []
    subject = "case_form"
    if kind not in THREAD_KINDS:
        violations.append(Violation(subject, f"unknown thread kind {kind!r}"))
        return violations
    if kind == "discussion":
        if form is not None:
            violations.append(Violation(subject, "discussion threads must not carry a case form"))
        return violations
    if form is None:
        violations.append(Violation(subject, f"{kind} threads require a case form"))
        return violations
    if not form.clinical_history.strip():
        violations.append(Violation(subject, "clinical_history must not be empty"))
    if form.age_band not in AGE_BANDS and form.age_band != "unspecified":
        violations.append(Violation(subject, f"unknown age band {form.age_band!r}"))
    if form.sex not in SEXES:
        violations.append(Violation(subject, f"unknown sex value {form.sex!r}"))
    return violations


def validate_group(group: Group) -> list:
    violations: list[Violation] = []
    if group.kind not in GROUP_KINDS:
        violations.append(Violation(group.id, f"unknown group kind {group.kind!r}"))
        return violations
    if group.kind == "professional_org":
        if group.affiliation is not None:
            violations.append(Violation(group.id, "professional_org groups carry no affiliation"))
    elif group.affiliation is None:
        violations.append(Violation(group.id, f"{group.kind} groups require an affiliation"))
    return violations


def _thread_is_primary(thread: Thread, user: Doctor) -> bool:
    if thread.creator == user.id:
        return True
    for a in thread.assignments:
        t = a.target
        if t.kind == "doctor" and t.doctor == user.id:
            return True
        if (
            t.kind == "department"
            and t.hospital == user.hospital
            and t.specialty in user.specialties
        ):
            return True
    return False


def _thread_in_user_groups(thread: Thread, user_id: str, groups_by_id: Mapping[str, Group]) -> bool:
    for a in thread.assignments:
        if a.target.kind != "group":
            continue
        group = groups_by_id.get(a.target.group or "")
        if group is not None and user_id in group.members:
            return True
    return False


def _activity_sorted(threads: list) -> list:
    ordered = sorted(threads, key=lambda t: t.id)
    ordered.sort(
        key=lambda t: (t.last_activity.physical_ms, t.last_activity.logical, t.last_activity.server_id),
        reverse=True,
    )
    return ordered


def partition_cases(
    user_id: str,
    doctors: Mapping[str, Doctor],
    threads: Iterable[Thread],
    groups: Iterable[Group],
) -> tuple:
    """Split threads into the welcome screen's (primary, other) lists.

    Primary: created by the user, assigned directly to the user, or assigned
    to a department of the user's hospital matching one of their specialties.
    Other: assigned to any group the user belongs to, minus primary. Stub
    threads carry no assignments, so they are surfaced in "other" for
    everyone (primary for their creator) until the full record arrives.
    Both lists are ordered by latest-activity HLC descending, ties broken by
    thread id ascending.
    """
    user = doctors.get(user_id)
    if user is None:
        raise UnknownDoctorError(user_id)
    groups_by_id = {g.id: g for g in groups}
    primary, other = [], []
    for thread in threads:
        if _thread_is_primary(thread, user):
            primary.append(thread)
        elif thread.stub:
            other.append(thread)
        elif _thread_in_user_groups(thread, user_id, groups_by_id):
            other.append(thread)
    return _activity_sorted(primary), _activity_sorted(other)

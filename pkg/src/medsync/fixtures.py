"""Entity fixtures: one JSONL file per entity kind.

A fixture directory holds hospitals.jsonl, doctors.jsonl, groups.jsonl,
edges.jsonl, threads.jsonl. Field names follow the entity wire forms;
timestamps are encoded "physical_ms:logical:server_id". The bundled
pilot fixture reproduces the published pilot-deployment numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .model import ColleagueEdge, Doctor, Group, Hospital, Thread


class FixtureError(Exception):
    pass


@dataclass
class FixtureSet:
    hospitals: Dict[str, Hospital] = field(default_factory=dict)
    doctors: Dict[str, Doctor] = field(default_factory=dict)
    groups: Dict[str, Group] = field(default_factory=dict)
    edges: List[ColleagueEdge] = field(default_factory=list)
    threads: List[Thread] = field(default_factory=list)


_FILES = (
    ("hospitals.jsonl", Hospital),
    ("doctors.jsonl", Doctor),
    ("groups.jsonl", Group),
    ("edges.jsonl", ColleagueEdge),
    ("threads.jsonl", Thread),
)


def _read_jsonl(path: Path) -> List[dict]:
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except ValueError as exc:
                raise FixtureError(f"{path}:{lineno}: invalid JSON: {exc}")
    return rows


def load_fixture(directory) -> FixtureSet:
    directory = Path(directory)
    if not directory.is_dir():
        raise FixtureError(f"fixture directory {directory} does not exist")
    fx = FixtureSet()
    for filename, cls in _FILES:
        path = directory / filename
        if not path.exists():
            continue
        for row in _read_jsonl(path):
            try:
                obj = cls.from_dict(row)
            except (KeyError, TypeError, ValueError) as exc:
                raise FixtureError(f"{path}: bad record {row!r}: {exc}")
            if cls is Hospital:
                fx.hospitals[obj.id] = obj
            elif cls is Doctor:
                fx.doctors[obj.id] = obj
            elif cls is Group:
                fx.groups[obj.id] = obj
            elif cls is ColleagueEdge:
                fx.edges.append(obj)
            else:
                fx.threads.append(obj)
    return fx


def write_fixture(directory, fx: FixtureSet) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    plans = (
        ("hospitals.jsonl", [h.to_dict() for h in sorted(fx.hospitals.values(), key=lambda x: x.id)]),
        ("doctors.jsonl", [d.to_dict() for d in sorted(fx.doctors.values(), key=lambda x: x.id)]),
        ("groups.jsonl", [g.to_dict() for g in sorted(fx.groups.values(), key=lambda x: x.id)]),
        ("edges.jsonl", [e.to_dict() for e in sorted(fx.edges, key=lambda x: (x.from_, x.to))]),
        ("threads.jsonl", [t.to_dict() for t in sorted(fx.threads, key=lambda x: x.id)]),
    )
    for filename, rows in plans:
        with (directory / filename).open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")


def pilot_fixture_dir() -> Path:
    return Path(__file__).parent / "fixtures" / "pilot"


def load_pilot() -> FixtureSet:
    return load_fixture(pilot_fixture_dir())


def fixture_events(fx: FixtureSet) -> List[Tuple[str, dict]]:
    """(kind, payload) pairs that rebuild the fixture through engine commits.

    Hospitals come before doctors, doctors before everything referencing
    them; timestamps are re-stamped at commit time, identities preserved.
    """
    out: List[Tuple[str, dict]] = []
    roots_first = sorted(
        fx.hospitals.values(), key=lambda h: (h.referral_parent is not None, h.id)
    )
    ordered: List[Hospital] = []
    placed = set()
    pending = list(roots_first)
    while pending:
        progressed = False
        rest = []
        for h in pending:
            if h.referral_parent is None or h.referral_parent in placed:
                ordered.append(h)
                placed.add(h.id)
                progressed = True
            else:
                rest.append(h)
        if not progressed:
            ordered.extend(rest)  # broken parents surface at commit validation
            break
        pending = rest
    for h in ordered:
        out.append(("HospitalCreated", {"hospital": h.to_dict()}))
    for d in sorted(fx.doctors.values(), key=lambda x: x.id):
        out.append(("UserCreated", {"doctor": d.to_dict()}))
    for g in sorted(fx.groups.values(), key=lambda x: x.id):
        payload = g.to_dict()
        members = payload.pop("members")
        out.append(("GroupCreated", {"group": payload}))
        for m in members:
            out.append(("MembershipChanged", {"doctor": m, "group": g.id, "member": True}))
    for e in sorted(fx.edges, key=lambda x: (x.from_, x.to)):
        out.append(("EdgeAdded", {"from": e.from_, "to": e.to}))
    for t in sorted(fx.threads, key=lambda x: x.id):
        payload = t.to_dict()
        assignments = payload.pop("assignments")
        out.append(("ThreadCreated", {"thread": payload}))
        for a in assignments:
            out.append(
                (
                    "AssignmentAdded",
                    {"thread": t.id, "assignment": {k: a[k] for k in ("target", "assigned_by")}},
                )
            )
    return out

"""Operational reports: thread categorization cross-tabs and the colleague
network export.

Categorization is structural, not content-coded: a thread is professional
iff it carries a case form, the first assignment decides the target kind,
and locality falls out of countries/affiliations. Group affiliation rules:
a group with no country or institution affiliation is a worldwide group.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .model import ColleagueEdge, Doctor, Group, Hospital, Thread

PURPOSES = ("professional", "social")
TARGET_KINDS = ("individual", "group")
LOCALITIES = ("overseas", "local", "worldwide_group")

# tab10-ish palette; hospitals are colored by sorted index
_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class ClassificationError(Exception):
    pass


class GraphExportError(Exception):
    pass


@dataclass(frozen=True)
class ThreadCategory:
    purpose: str
    target_kind: str
    locality: str
    specialization: Optional[str]

    def __post_init__(self):
        if self.locality == "worldwide_group" and self.target_kind != "group":
            raise ValueError("worldwide locality implies a group target")


def hospital_country(hospital_id: str, doctors: Mapping[str, Doctor], default: str) -> str:
    """Majority country of a hospital's doctors; alphabetical tie-break."""
    votes = Counter(d.country for d in doctors.values() if d.hospital == hospital_id)
    if not votes:
        return default
    top = max(votes.values())
    return sorted(c for c, n in votes.items() if n == top)[0]


def classify_thread(
    thread: Thread,
    doctors: Mapping[str, Doctor],
    groups: Mapping[str, Group],
    hospitals: Mapping[str, Hospital],
    home_country: str = "GH",
) -> ThreadCategory:
    if not thread.assignments:
        raise ClassificationError(f"thread {thread.id} has no assignment to classify")
    purpose = "professional" if thread.case_form is not None else "social"
    specialization = thread.case_form.specialization_requested if thread.case_form else None
    target = thread.assignments[0].target

    if target.kind == "doctor":
        target_kind = "individual"
        peer = doctors.get(target.doctor or "")
        if peer is None:
            raise ClassificationError(f"thread {thread.id}: unknown doctor target {target.doctor!r}")
        locality = "overseas" if peer.country != home_country else "local"
    elif target.kind == "group":
        target_kind = "group"
        group = groups.get(target.group or "")
        if group is None:
            raise ClassificationError(f"thread {thread.id}: unknown group target {target.group!r}")
        if group.kind == "country" and group.affiliation:
            locality = "overseas" if group.affiliation != home_country else "local"
        elif group.kind == "institution" and group.affiliation:
            country = hospital_country(group.affiliation, doctors, home_country)
            locality = "overseas" if country != home_country else "local"
        else:
            locality = "worldwide_group"
    else:  # department: institutional routing, grouped with group targets
        target_kind = "group"
        country = hospital_country(target.hospital or "", doctors, home_country)
        locality = "overseas" if country != home_country else "local"

    return ThreadCategory(
        purpose=purpose,
        target_kind=target_kind,
        locality=locality,
        specialization=specialization,
    )


@dataclass
class CategoryReport:
    specialization: Dict[str, Dict[str, int]] = field(default_factory=dict)
    target_kind: Dict[str, Dict[str, int]] = field(default_factory=dict)
    locality: Dict[str, Dict[str, int]] = field(default_factory=dict)
    total: int = 0

    def marginals(self) -> Dict[str, int]:
        out = {p: 0 for p in PURPOSES}
        for row in self.target_kind.values():
            for p in PURPOSES:
                out[p] += row.get(p, 0)
        return out

    def to_dict(self) -> dict:
        return {
            "specialization": self.specialization,
            "target_kind": self.target_kind,
            "locality": self.locality,
            "marginals": self.marginals(),
            "total": self.total,
        }

    def render_table(self) -> str:
        lines: List[str] = []

        def panel(title: str, rows: Dict[str, Dict[str, int]], order: Optional[Iterable[str]] = None):
            lines.append(title)
            lines.append(f"  {'':24} {'professional':>12} {'social':>8}")
            keys = list(order) if order is not None else sorted(rows)
            for key in keys:
                row = rows.get(key, {})
                lines.append(
                    f"  {key:24} {row.get('professional', 0):>12} {row.get('social', 0):>8}"
                )
            lines.append("")

        spec_order = sorted(self.specialization, key=lambda k: (k != "none", k))
        panel("Specialization requested", self.specialization, spec_order)
        panel("Target", self.target_kind, [k for k in TARGET_KINDS if k in self.target_kind])
        panel("Locality", self.locality, [k for k in LOCALITIES if k in self.locality])
        m = self.marginals()
        lines.append(f"Total threads: {self.total} (professional={m['professional']}, social={m['social']})")
        return "\n".join(lines)


def category_report(
    threads: Iterable[Thread],
    doctors: Mapping[str, Doctor],
    groups: Mapping[str, Group],
    hospitals: Mapping[str, Hospital],
    home_country: str = "GH",
) -> CategoryReport:
    report = CategoryReport()

    def bump(panel: Dict[str, Dict[str, int]], key: str, purpose: str):
        row = panel.setdefault(key, {p: 0 for p in PURPOSES})
        row[purpose] += 1

    for thread in threads:
        cat = classify_thread(thread, doctors, groups, hospitals, home_country)
        bump(report.specialization, cat.specialization or "none", cat.purpose)
        bump(report.target_kind, cat.target_kind, cat.purpose)
        bump(report.locality, cat.locality, cat.purpose)
        report.total += 1
    return report


# -- colleague network export ---------------------------------------------------


@dataclass
class GraphDoc:
    nodes: List[dict] = field(default_factory=list)  # {id, label, hospital, color}
    edges: List[dict] = field(default_factory=list)  # {from, to, relation}

    def sorted(self) -> "GraphDoc":
        return GraphDoc(
            nodes=sorted(self.nodes, key=lambda n: n["id"]),
            edges=sorted(self.edges, key=lambda e: (e["from"], e["to"])),
        )


def export_colleague_graph(
    doctors: Mapping[str, Doctor],
    edges: Iterable[ColleagueEdge],
    hospitals: Mapping[str, Hospital],
) -> GraphDoc:
    """Directed colleague graph over participants with network data.

    Only doctors incident to at least one edge become nodes; arrows point
    from the lister to the listed colleague.
    """
    edges = list(edges)
    incident = set()
    for e in edges:
        for d in (e.from_, e.to):
            if d not in doctors:
                raise GraphExportError(f"edge references unknown doctor {d!r}")
            incident.add(d)
    hospital_ids = sorted({doctors[d].hospital for d in incident})
    colors = {h: _PALETTE[i % len(_PALETTE)] for i, h in enumerate(hospital_ids)}
    nodes = []
    for d in sorted(incident):
        doc = doctors[d]
        nodes.append(
            {
                "id": d,
                "label": doc.display_name,
                "hospital": doc.hospital,
                "color": colors[doc.hospital],
            }
        )
    out_edges = []
    for e in sorted(edges, key=lambda e: (e.from_, e.to)):
        same = doctors[e.from_].hospital == doctors[e.to].hospital
        out_edges.append(
            {
                "from": e.from_,
                "to": e.to,
                "relation": "within_hospital" if same else "between_hospital",
            }
        )
    return GraphDoc(nodes=nodes, edges=out_edges)


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _unq(s: str) -> str:
    return s.replace('\\"', '"').replace("\\\\", "\\")


def to_json(doc: GraphDoc) -> str:
    d = doc.sorted()
    return json.dumps({"nodes": d.nodes, "edges": d.edges}, indent=2, sort_keys=True)


def from_json(text: str) -> GraphDoc:
    raw = json.loads(text)
    return GraphDoc(nodes=list(raw["nodes"]), edges=list(raw["edges"]))


def to_dot(doc: GraphDoc) -> str:
    """DOT with enough attributes to round-trip through the JSON form.

    Within-hospital edges render lighter than between-hospital ones.
    """
    d = doc.sorted()
    lines = ["digraph colleagues {", "  rankdir=LR;", "  node [style=filled];"]
    for n in d.nodes:
        lines.append(
            f"  {_q(n['id'])} [label={_q(n['label'])}, hospital={_q(n['hospital'])}, "
            f"fillcolor={_q(n['color'])}];"
        )
    for e in d.edges:
        shade = "grey70" if e["relation"] == "within_hospital" else "grey20"
        lines.append(
            f"  {_q(e['from'])} -> {_q(e['to'])} [relation={_q(e['relation'])}, color={_q(shade)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


_EDGE_RE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*->\s*"((?:[^"\\]|\\.)*)"\s*\[(.*)\];$')
_NODE_RE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*\[(.*)\];$')
_ATTR_RE = re.compile(r'(\w+)="((?:[^"\\]|\\.)*)"')


def parse_dot(text: str) -> GraphDoc:
    nodes, edges = [], []
    for line in text.splitlines():
        m = _EDGE_RE.match(line)
        if m:
            attrs = {k: _unq(v) for k, v in _ATTR_RE.findall(m.group(3))}
            edges.append(
                {"from": _unq(m.group(1)), "to": _unq(m.group(2)), "relation": attrs["relation"]}
            )
            continue
        m = _NODE_RE.match(line)
        if m and "->" not in line.split("[", 1)[0]:
            attrs = {k: _unq(v) for k, v in _ATTR_RE.findall(m.group(2))}
            if "label" in attrs:
                nodes.append(
                    {
                        "id": _unq(m.group(1)),
                        "label": attrs["label"],
                        "hospital": attrs["hospital"],
                        "color": attrs["fillcolor"],
                    }
                )
    return GraphDoc(nodes=nodes, edges=edges)

#!/usr/bin/env python3
"""Regenerate the bundled pilot fixture (src/medsync/fixtures/pilot/).

The fixture is a deterministic snapshot of a small telemedicine pilot:
a tiered referral hierarchy of Ghanaian hospitals plus a handful of
overseas teaching hospitals, 73 enrolled doctors (29 of whom have entered
colleague-network data), eight groups covering all four group kinds, and
16 conversational threads whose categorization cross-tabs hit exact
published pilot counts:

    target panel    individual=10 (5 professional, 5 social), group=6 (all professional)
    locality panel  overseas=5 (4 professional, 1 social), local=8 (4+4), worldwide=3 (all professional)
    specializations (professional column) none=1, internal_medicine=4, urology=2,
                    pediatrics=1, obstetrics_gynaecology=1, surgery=1, ophthalmology=1

Social threads are bare discussions, so their specialization is always
none by construction. The script validates every invariant and the full
report before writing, so a bad edit fails here rather than in the suite.
"""

from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from medsync.fixtures import FixtureSet, pilot_fixture_dir, write_fixture
from medsync.hlc import HlcTimestamp
from medsync.model import (
    Assignment,
    CaseForm,
    ColleagueEdge,
    Contact,
    Doctor,
    Group,
    Hospital,
    Target,
    Thread,
    validate_case_form,
    validate_group,
    validate_hierarchy,
)
from medsync.report import category_report, export_colleague_graph

BASE_MS = int(datetime(2008, 5, 5, 8, 0, tzinfo=timezone.utc).timestamp() * 1000)
HOUR_MS = 3_600_000

TEACHING_DEPTS = (
    "internal_medicine",
    "obstetrics_gynaecology",
    "ophthalmology",
    "pediatrics",
    "radiology",
    "surgery",
    "urology",
)
REGIONAL_DEPTS = ("internal_medicine", "obstetrics_gynaecology", "pediatrics", "surgery")

HOSPITALS = [
    # id, name, tier, region, parent, departments
    ("h-korle-bu", "Korle Bu Teaching Hospital", "teaching", "Greater Accra", None, TEACHING_DEPTS),
    ("h-komfo-anokye", "Komfo Anokye Teaching Hospital", "teaching", "Ashanti", None,
     ("internal_medicine", "obstetrics_gynaecology", "pediatrics", "surgery", "urology")),
    ("h-cape-coast", "Cape Coast Regional Hospital", "regional", "Central", "h-korle-bu", REGIONAL_DEPTS),
    ("h-koforidua", "Koforidua Regional Hospital", "regional", "Eastern", "h-korle-bu", REGIONAL_DEPTS),
    ("h-sunyani", "Sunyani Regional Hospital", "regional", "Brong-Ahafo", "h-komfo-anokye", REGIONAL_DEPTS),
    ("h-winneba", "Winneba District Hospital", "district", "Central", "h-cape-coast", ()),
    ("h-dunkwa", "Dunkwa District Hospital", "district", "Central", "h-cape-coast", ()),
    ("h-akwatia", "Akwatia Health Centre", "clinic", "Eastern", "h-koforidua", ()),
    ("h-lister", "Lister Private Hospital", "private", "Greater Accra", None, ()),
    ("h-hopkins", "Johns Hopkins Hospital", "teaching", "Maryland", None,
     ("internal_medicine", "ophthalmology", "pediatrics", "surgery")),
    ("h-st-thomas", "St Thomas' Hospital", "teaching", "London", None,
     ("internal_medicine", "obstetrics_gynaecology", "surgery")),
    ("h-lagos", "Lagos University Teaching Hospital", "teaching", "Lagos", None,
     ("internal_medicine", "pediatrics")),
    ("h-point-g", "Point G Teaching Hospital", "teaching", "Bamako", None, ("internal_medicine",)),
    ("h-groote-schuur", "Groote Schuur Hospital", "teaching", "Western Cape", None, ("surgery",)),
]

# Doctor index -> hospital. Narrative slots are pinned: 11 practices at the
# private hospital, 20/34 are the district-hospital bridges, 38/42/62 are the
# sparsely-connected juniors, 48/55/58 came to Ghana with the Cuban brigade.
HOSPITAL_OF = {}
for _rng, _h in (
    (list(range(1, 11)) + list(range(12, 19)) + [42], "h-korle-bu"),
    ([11, 44], "h-lister"),
    ([19, 20, 62], "h-winneba"),
    (list(range(21, 30)) + [43, 48, 55], "h-komfo-anokye"),
    (list(range(30, 34)) + [35, 45, 46, 47, 58, 59], "h-cape-coast"),
    ([34, 36], "h-dunkwa"),
    (list(range(37, 42)) + [53, 54, 56], "h-koforidua"),
    (list(range(49, 53)) + [57, 60], "h-sunyani"),
    ([61], "h-akwatia"),
    ([63], "h-point-g"),
    ([64], "h-groote-schuur"),
    ([65, 66, 67, 68], "h-hopkins"),
    ([69, 70, 71], "h-st-thomas"),
    ([72, 73], "h-lagos"),
):
    for _i in _rng:
        HOSPITAL_OF[_i] = _h
assert sorted(HOSPITAL_OF) == list(range(1, 74))

COUNTRY_OF_HOSPITAL = {
    "h-hopkins": "US",
    "h-st-thomas": "GB",
    "h-lagos": "NG",
    "h-point-g": "ML",
    "h-groote-schuur": "ZA",
}

# (index, display_name, specialties, seniority) overrides; everyone else is a
# senior generalist drawn from the name pool.
PROFILES = {
    1: ("Dr. Nana Adjei Mensah", ("internal_medicine",), "specialist"),
    2: ("Dr. Akosua Boateng", ("internal_medicine",), "specialist"),
    3: ("Dr. Kwame Osei", ("surgery",), "specialist"),
    4: ("Dr. Efua Asante", ("urology",), "specialist"),
    5: ("Dr. Yaw Darko", ("radiology",), "specialist"),
    9: ("Dr. Adwoa Quartey", (), "junior"),
    11: ("Dr. Kojo Vanderpuye", ("internal_medicine",), "senior"),
    12: ("Dr. Abena Addo", ("ophthalmology",), "specialist"),
    13: ("Dr. Kwabena Tetteh", ("pediatrics",), "specialist"),
    14: ("Dr. Esi Amoah", ("obstetrics_gynaecology",), "specialist"),
    20: ("Dr. Kofi Eshun", (), "senior"),
    21: ("Dr. Ama Sarpong", ("internal_medicine",), "specialist"),
    22: ("Dr. Kwaku Antwi", ("surgery",), "specialist"),
    23: ("Dr. Yaa Bonsu", ("pediatrics",), "specialist"),
    24: ("Dr. Ekow Dadzie", (), "junior"),
    30: ("Dr. Araba Hammond", ("internal_medicine",), "specialist"),
    31: ("Dr. Fiifi Lamptey", ("surgery",), "specialist"),
    34: ("Dr. Maame Aidoo", (), "senior"),
    35: ("Dr. Kwesi Arthur", (), "junior"),
    38: ("Dr. Afia Ankrah", (), "junior"),
    40: ("Dr. Kobina Essel", ("internal_medicine",), "specialist"),
    42: ("Dr. Adjoa Tagoe", (), "junior"),
    45: ("Dr. Mansa Clottey", ("pediatrics",), "specialist"),
    48: ("Dr. Yoel Fernandez", ("urology",), "specialist"),
    50: ("Dr. Kwadwo Gyasi", ("internal_medicine",), "specialist"),
    53: ("Dr. Baaba Odoi", (), "junior"),
    55: ("Dr. Marisol Castillo", ("pediatrics",), "specialist"),
    58: ("Dr. Reinaldo Duarte", ("obstetrics_gynaecology",), "specialist"),
    61: ("Dr. Ato Laryea", (), "senior"),
    63: ("Dr. Amadou Traore", ("internal_medicine",), "specialist"),
    64: ("Dr. Thandiwe Nkosi", ("surgery",), "specialist"),
    65: ("Dr. Daniel Whitman", ("internal_medicine",), "specialist"),
    66: ("Dr. Grace Liang", ("pediatrics",), "specialist"),
    67: ("Dr. Miguel Santos", ("surgery",), "specialist"),
    68: ("Dr. Ruth Eisenberg", ("ophthalmology",), "specialist"),
    69: ("Dr. James Ashworth", ("internal_medicine",), "specialist"),
    70: ("Dr. Priya Sharma", ("surgery",), "specialist"),
    71: ("Dr. Oliver Bennett", ("obstetrics_gynaecology",), "specialist"),
    72: ("Dr. Chinedu Okafor", ("internal_medicine",), "specialist"),
    73: ("Dr. Funmilayo Adeyemi", ("pediatrics",), "specialist"),
}

FIRST_NAMES = (
    "Akos", "Ewurama", "Otu", "Esinam", "Elikem", "Selorm", "Dela", "Mawuli",
    "Edem", "Enyonam", "Sena", "Etornam", "Aba", "Paa", "Naa", "Adoley",
    "Korkor", "Dede", "Tawiah", "Okailey", "Lartey", "Ashong", "Amerley",
    "Oko", "Nii", "Teiko", "Klorkor", "Momo", "Laweh", "Ayeley", "Adukwei",
    "Kai", "Tsotsoo", "Odartey", "Okaikor", "Dzifa", "Abla", "Elorm", "Makafui",
    "Seyram", "Worlanyo", "Xorlali", "Yayra", "Zanetor", "Afariwaa",
)
LAST_NAMES = (
    "Owusu", "Appiah", "Danso", "Ofori", "Frimpong", "Acheampong", "Opoku",
    "Nkrumah", "Quaye", "Commey", "Sowah", "Abbey", "Odamtten", "Tetteh-Quao",
    "Annan", "Agyemang", "Asamoah", "Badu", "Boakye", "Donkor", "Duah",
    "Fosu", "Kusi", "Nyarko", "Obeng", "Ocran", "Oduro", "Prempeh", "Safo",
    "Takyi", "Wiredu", "Yeboah", "Agyei", "Amponsah", "Ansah", "Asiedu",
    "Baidoo", "Bediako", "Boahen", "Brobbey", "Buabeng", "Coffie", "Daanaa",
    "Debrah", "Djan",
)


def _fallback_name(i: int) -> str:
    return f"Dr. {FIRST_NAMES[i % len(FIRST_NAMES)]} {LAST_NAMES[i % len(LAST_NAMES)]}"


def build_doctors() -> dict:
    doctors = {}
    for i in range(1, 74):
        did = f"d-{i:02d}"
        hospital = HOSPITAL_OF[i]
        country = COUNTRY_OF_HOSPITAL.get(hospital, "GH")
        name, specialties, seniority = PROFILES.get(i, (_fallback_name(i), (), "senior"))
        email = None if i == 61 else f"{did}@pilot.medsync.example"
        phone = f"+23320{i:04d}11" if country == "GH" else None
        doctors[did] = Doctor(
            id=did,
            display_name=name,
            hospital=hospital,
            specialties=frozenset(specialties),
            country=country,
            seniority=seniority,
            contact=Contact(email=email, phone=phone),
            is_admin=(i == 1),
        )
    return doctors


GROUPS = [
    # id, name, kind, affiliation, members
    ("g-gpsf", "Ghana Physicians and Surgeons Foundation", "professional_org", None,
     ("d-01", "d-02", "d-05", "d-21", "d-30", "d-63", "d-64", "d-65", "d-66", "d-69", "d-72")),
    ("g-surgery-forum", "Surgery Specialty Forum", "specialty", "surgery",
     ("d-03", "d-22", "d-31", "d-64", "d-67", "d-70")),
    ("g-ophthalmology-forum", "Ophthalmology Forum", "specialty", "ophthalmology",
     ("d-12", "d-68")),
    ("g-pediatrics-forum", "Pediatrics Forum", "specialty", "pediatrics",
     ("d-13", "d-23", "d-45", "d-55", "d-66", "d-73")),
    ("g-hopkins-medicine", "Hopkins Medicine Network", "institution", "h-hopkins",
     ("d-02", "d-65", "d-66", "d-67", "d-68")),
    ("g-kbth-staff", "Korle Bu Staff Forum", "institution", "h-korle-bu",
     ("d-01", "d-02", "d-03", "d-04", "d-05", "d-06", "d-07", "d-08", "d-09", "d-10")),
    ("g-uk-gh-doctors", "Ghanaian Doctors Association UK", "country", "GB",
     ("d-03", "d-69", "d-70", "d-71")),
    ("g-gma", "Ghana Medical Association", "country", "GH",
     ("d-01", "d-02", "d-03", "d-04", "d-05", "d-20", "d-21", "d-30", "d-34", "d-40", "d-50", "d-61")),
]

# Directed colleague listings; exactly 29 distinct doctors appear. The two
# district doctors (20, 34) and the private-hospital doctor (11) bridge
# otherwise-distant clusters; juniors 38/42/62 each list a single mentor;
# the Cuban doctors 48/55/58 only list people inside their own hospital.
EDGES = [
    ("d-01", "d-02"), ("d-02", "d-01"), ("d-01", "d-03"), ("d-03", "d-04"),
    ("d-04", "d-05"), ("d-05", "d-01"), ("d-06", "d-01"), ("d-42", "d-02"),
    ("d-02", "d-65"), ("d-65", "d-02"), ("d-03", "d-69"), ("d-07", "d-72"),
    ("d-72", "d-01"),
    ("d-21", "d-22"), ("d-22", "d-21"), ("d-48", "d-55"), ("d-55", "d-48"),
    ("d-48", "d-21"), ("d-21", "d-01"),
    ("d-30", "d-31"), ("d-31", "d-30"), ("d-32", "d-30"), ("d-58", "d-30"),
    ("d-35", "d-30"), ("d-35", "d-31"), ("d-35", "d-20"), ("d-30", "d-01"),
    ("d-38", "d-40"), ("d-53", "d-40"), ("d-53", "d-21"), ("d-40", "d-04"),
    ("d-50", "d-51"), ("d-51", "d-50"), ("d-50", "d-21"),
    ("d-20", "d-30"), ("d-20", "d-02"), ("d-34", "d-30"), ("d-34", "d-50"),
    ("d-62", "d-20"),
    ("d-11", "d-01"), ("d-11", "d-31"), ("d-05", "d-11"), ("d-11", "d-69"),
]

SERVER_OF_HOSPITAL = {
    "h-cape-coast": "cc1",
    "h-koforidua": "kf1",
    "h-winneba": "wn1",
    "h-dunkwa": "dk1",
    "h-hopkins": "us1",
    "h-st-thomas": "us1",
    "h-lagos": "us1",
    "h-point-g": "us1",
    "h-groote-schuur": "us1",
}

CASE_TEXTS = {
    "t-01": ("40-49", "male", "Recurrent epigastric pain with melena, not responding to omeprazole. "
             "H. pylori status unknown; endoscopy unavailable locally."),
    "t-02": ("20-29", "male", "Road traffic accident with compound tibial fracture, now with wound "
             "breakdown two weeks post external fixation."),
    "t-03": ("60-69", "female", "Progressive bilateral visual loss over six months, intraocular "
             "pressures 34/36 mmHg on Schiotz. Requesting management advice."),
    "t-04": ("50-59", "female", "Poorly controlled type 2 diabetes with new proteinuria and "
             "resistant hypertension on three agents."),
    "t-05": ("30-39", "female", "G4P3 at 32 weeks with severe pre-eclampsia; managing with "
             "magnesium sulphate, seeking advice on timing of delivery."),
    "t-06": ("70-79", "male", "New atrial fibrillation with fast ventricular response; no "
             "echocardiography on site. Anticoagulation question given falls risk."),
    "t-07": ("0-9", "female", "Recurrent febrile seizures in a 4-year-old with developmental "
             "regression since the last episode."),
    "t-08": ("40-49", "male", "Chronic diarrhoea and weight loss, stool studies negative twice, "
             "HIV test negative. Next investigations?"),
    "t-09": ("50-59", "male", "Obstructive urinary symptoms with a hard nodular prostate and "
             "PSA 28. Biopsy and staging advice requested."),
    "t-10": ("60-69", "male", "Painless haematuria for three weeks; ultrasound shows a bladder "
             "mass. Cystoscopy availability and referral pathway?"),
    "t-11": ("10-19", "female", "Two-week fever with joint pains and a new murmur; ASO titre "
             "pending. Would value a second opinion on rheumatic fever workup."),
}

# id, kind, creator, target, specialization_requested
THREADS = [
    ("t-01", "consultation", "d-20", Target.to_group("g-gpsf"), "internal_medicine"),
    ("t-02", "consultation", "d-38", Target.to_group("g-surgery-forum"), "surgery"),
    ("t-03", "consultation", "d-42", Target.to_group("g-ophthalmology-forum"), "ophthalmology"),
    ("t-04", "consultation", "d-30", Target.to_group("g-hopkins-medicine"), "internal_medicine"),
    ("t-05", "consultation", "d-14", Target.to_group("g-uk-gh-doctors"), "obstetrics_gynaecology"),
    ("t-06", "consultation", "d-34", Target.to_group("g-gma"), "internal_medicine"),
    ("t-07", "consultation", "d-45", Target.to_doctor("d-66"), "pediatrics"),
    ("t-08", "consultation", "d-40", Target.to_doctor("d-69"), "internal_medicine"),
    ("t-09", "consultation", "d-31", Target.to_doctor("d-04"), "urology"),
    ("t-10", "consultation", "d-55", Target.to_doctor("d-48"), "urology"),
    ("t-11", "consultation", "d-58", Target.to_doctor("d-30"), None),
    ("t-12", "discussion", "d-02", Target.to_doctor("d-65"), None),
    ("t-13", "discussion", "d-42", Target.to_doctor("d-02"), None),
    ("t-14", "discussion", "d-01", Target.to_doctor("d-21"), None),
    ("t-15", "discussion", "d-30", Target.to_doctor("d-31"), None),
    ("t-16", "discussion", "d-20", Target.to_doctor("d-34"), None),
]


def build_threads(doctors: dict) -> list:
    threads = []
    for n, (tid, kind, creator, target, spec_req) in enumerate(THREADS):
        server = SERVER_OF_HOSPITAL.get(doctors[creator].hospital, "gh1")
        created = HlcTimestamp(BASE_MS + n * 19 * HOUR_MS, 0, server)
        assigned = HlcTimestamp(created.physical_ms + 90_000, 0, server)
        form = None
        if kind != "discussion":
            age_band, sex, history = CASE_TEXTS[tid]
            form = CaseForm(
                age_band=age_band,
                sex=sex,
                clinical_history=history,
                specialization_requested=spec_req,
            )
        threads.append(
            Thread(
                id=tid,
                kind=kind,
                creator=creator,
                created_at=created,
                case_form=form,
                assignments=[Assignment(target=target, assigned_by=creator, at=assigned)],
            )
        )
    return threads


def build() -> FixtureSet:
    fx = FixtureSet()
    for hid, name, tier, region, parent, depts in HOSPITALS:
        fx.hospitals[hid] = Hospital(
            id=hid, name=name, tier=tier, region=region,
            referral_parent=parent, departments=frozenset(depts),
        )
    fx.doctors = build_doctors()
    for gid, name, kind, affiliation, members in GROUPS:
        fx.groups[gid] = Group(id=gid, name=name, kind=kind, affiliation=affiliation, members=set(members))
    fx.edges = [ColleagueEdge(from_=a, to=b) for a, b in EDGES]
    fx.threads = build_threads(fx.doctors)
    return fx


def check(fx: FixtureSet) -> None:
    problems = validate_hierarchy(fx.hospitals.values())
    assert not problems, problems
    for g in fx.groups.values():
        assert not validate_group(g), g.id
        for m in g.members:
            assert m in fx.doctors, (g.id, m)
    for d in fx.doctors.values():
        assert d.hospital in fx.hospitals, d.id
    assert len(fx.doctors) == 73, len(fx.doctors)

    seen_pairs = set()
    incident = set()
    for e in fx.edges:
        assert e.from_ != e.to, e
        assert (e.from_, e.to) not in seen_pairs, e
        seen_pairs.add((e.from_, e.to))
        incident.update((e.from_, e.to))
    assert len(incident) == 29, len(incident)
    graph = export_colleague_graph(fx.doctors, fx.edges, fx.hospitals)
    assert len(graph.nodes) == 29 and len(graph.edges) == len(EDGES)

    assert len(fx.threads) == 16
    for t in fx.threads:
        assert not validate_case_form(t.case_form, t.kind), t.id

    rep = category_report(fx.threads, fx.doctors, fx.groups, fx.hospitals, home_country="GH")
    assert rep.target_kind == {
        "individual": {"professional": 5, "social": 5},
        "group": {"professional": 6, "social": 0},
    }, rep.target_kind
    assert rep.locality == {
        "overseas": {"professional": 4, "social": 1},
        "local": {"professional": 4, "social": 4},
        "worldwide_group": {"professional": 3, "social": 0},
    }, rep.locality
    professional_specs = {k: v["professional"] for k, v in rep.specialization.items()}
    assert professional_specs == {
        "none": 1, "internal_medicine": 4, "urology": 2, "pediatrics": 1,
        "obstetrics_gynaecology": 1, "surgery": 1, "ophthalmology": 1,
    }, professional_specs
    assert rep.marginals() == {"professional": 11, "social": 5}


def main() -> None:
    fx = build()
    check(fx)
    out = pilot_fixture_dir()
    write_fixture(out, fx)
    print(f"wrote pilot fixture to {out}")
    print(f"  hospitals={len(fx.hospitals)} doctors={len(fx.doctors)} groups={len(fx.groups)}")
    print(f"  edges={len(fx.edges)} threads={len(fx.threads)}")


if __name__ == "__main__":
    main()

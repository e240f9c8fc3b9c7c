"""HTTP facade tests: sessions, the intake wizard, error mapping, peer sync.

The app is driven through fastapi's TestClient. For the client half of the
sync protocol a second engine talks to the live app through HttpSyncTransport
with the TestClient standing in for the network.
"""

from types import SimpleNamespace

import httpx
import pytest
from fastapi.testclient import TestClient

from medsync.api import (
    PEER_SECRET_HEADER,
    PROTOCOL_HEADER,
    SESSION_TTL_S,
    HttpSyncTransport,
    create_app,
    make_credential,
    verify_credential,
)
from medsync.config import ServerConfig
from medsync.engine import (
    PROTOCOL_VERSION,
    LoopbackTransport,
    ProtocolMismatchError,
    ReplicationEngine,
    TransportError,
)

from conftest import ManualClock, mk_event

PEER_SECRET = "wire-pw"
FORM = {"clinical_history": "fever and flank pain", "specialization_requested": "urology"}


class SecondsClock:
    """Settable wall clock, in seconds, for session bookkeeping."""

    def __init__(self, start=1_700_000_000.0):
        self.t = start

    def __call__(self):
        return self.t


class DownTransport:
    def exchange_digest(self, vv):
        raise TransportError("host unreachable")

    def push_delta(self, events):
        raise TransportError("host unreachable")


def build_engine(server_id="accra"):
    clock = ManualClock()
    eng = ReplicationEngine(server_id, now_ms=clock)
    eng.commit(
        "HospitalCreated",
        {
            "hospital": {
                "id": "h1",
                "name": "Korle Bu",
                "tier": "teaching",
                "region": "Greater Accra",
                "country": "GH",
                "departments": ["urology", "radiology"],
            }
        },
    )
    eng.commit(
        "HospitalCreated",
        {
            "hospital": {
                "id": "h2",
                "name": "Winneba",
                "tier": "district",
                "region": "Central",
                "country": "GH",
                "referral_parent": "h1",
            }
        },
    )
    eng.commit(
        "UserCreated",
        {
            "doctor": {"id": "root", "display_name": "Root Admin", "hospital": "h1", "is_admin": True},
            "credential": make_credential("root-pw"),
        },
    )
    eng.commit(
        "UserCreated",
        {
            "doctor": {"id": "alice", "display_name": "Alice Mensah", "hospital": "h2"},
            "credential": make_credential("alice-pw"),
        },
    )
    eng.commit(
        "UserCreated",
        {
            "doctor": {
                "id": "bob",
                "display_name": "Bob Quartey",
                "hospital": "h1",
                "specialties": ["urology"],
            },
            "credential": make_credential("bob-pw"),
        },
    )
    eng.commit(
        "UserCreated",
        {
            "doctor": {"id": "carol", "display_name": "Carol Addo", "hospital": "h1"},
            "credential": make_credential("carol-pw"),
        },
    )
    # dan exists in the directory but was provisioned without a credential
    eng.commit("UserCreated", {"doctor": {"id": "dan", "display_name": "Dan Tetteh", "hospital": "h1"}})
    eng.commit(
        "GroupCreated",
        {"group": {"id": "g-uro", "name": "Urology forum", "kind": "specialty", "affiliation": "urology"}},
    )
    eng.commit("MembershipChanged", {"doctor": "carol", "group": "g-uro", "member": True})
    eng.commit("EdgeAdded", {"from": "alice", "to": "bob"})
    return eng, clock


@pytest.fixture()
def api():
    eng, eng_clock = build_engine()
    clock = SecondsClock()
    cfg = ServerConfig(server_id="accra", test_mode=True, peer_secret=PEER_SECRET)
    app = create_app(cfg, eng, now_s=clock)
    return SimpleNamespace(engine=eng, engine_clock=eng_clock, clock=clock, app=app, client=TestClient(app))


def login(client, doctor="alice", secret="alice-pw"):
    resp = client.post("/api/v1/login", json={"doctor": doctor, "secret": secret})
    assert resp.status_code == 200, resp.text
    return {"Authorization": "Bearer " + resp.json()["token"]}


def make_thread(api, headers, target=None, **thread):
    payload = {"thread": {"kind": "consultation", "case_form": dict(FORM), **thread}}
    if target is not None:
        payload["target"] = target
    resp = api.client.post("/api/v1/threads", json=payload, headers=headers)
    assert resp.status_code == 200, resp.text
    return resp.json()["thread"]


def peer_headers(secret=PEER_SECRET, protocol=str(PROTOCOL_VERSION)):
    return {PROTOCOL_HEADER: protocol, PEER_SECRET_HEADER: secret}


# -- password hashing ---------------------------------------------------------


def test_credential_round_trip():
    cred = make_credential("hunter2")
    assert verify_credential(cred, "hunter2")
    assert not verify_credential(cred, "hunter3")
    assert cred["algo"] == "pbkdf2_sha256"
    assert cred["iterations"] == 50_000


def test_credentials_are_salted():
    a, b = make_credential("same secret"), make_credential("same secret")
    assert a["salt"] != b["salt"]
    assert a["hash"] != b["hash"]
    assert verify_credential(a, "same secret") and verify_credential(b, "same secret")


def test_absent_credential_never_verifies():
    assert not verify_credential(None, "")
    assert not verify_credential({}, "anything")


@pytest.mark.parametrize(
    "mangle",
    [
        lambda c: c.update(algo="md5"),
        lambda c: c.pop("salt"),
        lambda c: c.update(salt="not-hex"),
        lambda c: c.update(iterations="plenty"),
        lambda c: c.update(iterations=1),
        lambda c: c.update(hash="00" * 32),
    ],
)
def test_mangled_credentials_never_verify(mangle):
    cred = make_credential("pw")
    mangle(cred)
    assert not verify_credential(cred, "pw")


# -- the session gate ---------------------------------------------------------


def test_every_api_route_demands_a_session(api):
    """Walks the live route table so a new endpoint cannot dodge the gate."""
    checked = []
    for route in api.app.routes:
        path = getattr(route, "path", "")
        if not path.startswith("/api/v1") or path == "/api/v1/login":
            continue
        for method in sorted(route.methods - {"HEAD", "OPTIONS"}):
            resp = api.client.request(method, path.replace("{thread_id}", "t-x"), json={})
            assert resp.status_code == 401, (method, path, resp.status_code)
            checked.append((method, path))
    assert len(checked) == 16


def test_misshapen_authorization_headers_rejected(api):
    for value in ("Bearer ", "Bearer nope", "Basic YWI=", "raw-token"):
        resp = api.client.get("/api/v1/me", headers={"Authorization": value})
        assert resp.status_code == 401, value


def test_login_issues_token_and_me_returns_profile(api):
    resp = api.client.post("/api/v1/login", json={"doctor": "alice", "secret": "alice-pw"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["doctor"] == "alice"
    assert body["expires_at"] == api.clock.t + SESSION_TTL_S
    me = api.client.get("/api/v1/me", headers={"Authorization": "Bearer " + body["token"]})
    doctor = me.json()["doctor"]
    assert doctor["display_name"] == "Alice Mensah"
    # profile is the directory record, never credential material
    assert set(doctor) == {
        "id",
        "display_name",
        "hospital",
        "specialties",
        "country",
        "seniority",
        "contact",
        "is_admin",
    }


def test_login_failures_share_one_error_shape(api):
    # wrong password, unknown account, and a passwordless account look alike
    for payload in (
        {"doctor": "alice", "secret": "wrong"},
        {"doctor": "zz-top", "secret": "wrong"},
        {"doctor": "dan", "secret": ""},
    ):
        resp = api.client.post("/api/v1/login", json=payload)
        assert resp.status_code == 401, payload
        assert resp.json()["detail"] == "bad credentials"


def test_login_rate_limit_locks_the_account_after_five_failures(api):
    bad = {"doctor": "alice", "secret": "wrong"}
    for _ in range(5):
        assert api.client.post("/api/v1/login", json=bad).status_code == 401
    # the limiter runs before verification, so the real password is no oracle
    good = {"doctor": "alice", "secret": "alice-pw"}
    assert api.client.post("/api/v1/login", json=good).status_code == 429
    # other accounts are untouched
    login(api.client, "bob", "bob-pw")
    # and the window slides: a minute later the real password works again
    api.clock.t += 61
    assert api.client.post("/api/v1/login", json=good).status_code == 200


def test_sessions_expire_after_a_day(api):
    headers = login(api.client)
    api.clock.t += SESSION_TTL_S - 1
    assert api.client.get("/api/v1/me", headers=headers).status_code == 200
    api.clock.t += 1  # the expiry instant itself is already out
    assert api.client.get("/api/v1/me", headers=headers).status_code == 401
    # eviction is permanent, not clock-dependent
    api.clock.t -= 3600
    assert api.client.get("/api/v1/me", headers=headers).status_code == 401


# -- the intake wizard ----------------------------------------------------------


def test_wizard_submits_thread_and_first_assignment_in_one_step(api):
    headers = login(api.client)
    before = len(api.engine.all_events())
    doc = make_thread(api, headers, target={"doctor": "bob"}, id="t-wiz", creator="mallory")
    assert doc["id"] == "t-wiz"
    assert doc["creator"] == "alice"  # session identity wins over the body
    assert doc["status"] == "open"
    [a] = doc["assignments"]
    assert a["target"] == {"doctor": "bob"}
    assert a["assigned_by"] == "alice"
    assert doc["case_form"]["clinical_history"] == FORM["clinical_history"]
    assert len(api.engine.all_events()) == before + 2


def test_wizard_invents_a_thread_id_when_the_form_has_none(api):
    headers = login(api.client)
    doc = make_thread(api, headers)
    assert doc["id"].startswith("t-") and len(doc["id"]) == 14
    assert doc["assignments"] == []
    assert api.client.get(f"/api/v1/threads/{doc['id']}", headers=headers).status_code == 200


def test_wizard_accepts_department_targets(api):
    headers = login(api.client)
    doc = make_thread(api, headers, target={"department": {"hospital": "h1", "specialty": "urology"}})
    [a] = doc["assignments"]
    assert a["target"] == {"department": {"hospital": "h1", "specialty": "urology"}}


@pytest.mark.parametrize(
    "target",
    [
        {"doctor": "nobody"},
        {"group": "g-ghost"},
        {"department": {"hospital": "h1", "specialty": "cardiology"}},
        {"department": {"hospital": "h9", "specialty": "urology"}},
    ],
)
def test_wizard_rejects_bad_targets_before_the_thread_lands(api, target):
    headers = login(api.client)
    before = len(api.engine.all_events())
    resp = api.client.post(
        "/api/v1/threads",
        json={"thread": {"id": "t-orphan", "kind": "consultation", "case_form": dict(FORM)}, "target": target},
        headers=headers,
    )
    assert resp.status_code == 422
    assert len(api.engine.all_events()) == before  # nothing reached the log
    assert api.client.get("/api/v1/threads/t-orphan", headers=headers).status_code == 404


@pytest.mark.parametrize(
    "target",
    [
        {"ward": "w-1"},  # no recognized key
        {"department": "urology"},  # string where an object is required
        {"department": {"hospital": "h1"}},  # specialty missing
        {"doctor": ["bob"]},  # id must be a plain string
        {"group": 7},
        "h1/urology",  # not even an object
    ],
)
def test_wizard_rejects_target_of_unknown_shape(api, target):
    headers = login(api.client)
    resp = api.client.post(
        "/api/v1/threads",
        json={"thread": {"kind": "consultation", "case_form": dict(FORM)}, "target": target},
        headers=headers,
    )
    assert resp.status_code == 422
    assert "doctor, group, or department" in resp.json()["detail"]


def test_duplicate_thread_id_maps_to_conflict(api):
    headers = login(api.client)
    make_thread(api, headers, id="t-dup")
    resp = api.client.post(
        "/api/v1/threads",
        json={"thread": {"id": "t-dup", "kind": "consultation", "case_form": dict(FORM)}},
        headers=headers,
    )
    assert resp.status_code == 409


def test_commit_validation_maps_to_unprocessable(api):
    headers = login(api.client)
    resp = api.client.post(
        "/api/v1/threads",
        json={"thread": {"kind": "discussion", "case_form": dict(FORM)}},
        headers=headers,
    )
    assert resp.status_code == 422
    assert "case form" in resp.json()["detail"]


# -- case lists and thread JSON -----------------------------------------------


def test_thread_buckets_follow_involvement(api):
    alice = login(api.client)
    bob = login(api.client, "bob", "bob-pw")
    root = login(api.client, "root", "root-pw")
    t1 = make_thread(api, alice, target={"doctor": "bob"})["id"]
    t2 = make_thread(api, alice, target={"group": "g-uro"})["id"]
    t3 = make_thread(api, alice, target={"department": {"hospital": "h1", "specialty": "urology"}})["id"]
    api.client.put("/api/v1/memberships", json={"group": "g-uro", "member": True}, headers=bob)

    def buckets(headers):
        body = api.client.get("/api/v1/threads", headers=headers).json()
        return [t["id"] for t in body["primary"]], [t["id"] for t in body["other"]]

    a_primary, a_other = buckets(alice)
    assert a_primary == [t3, t2, t1]  # creator sees all, latest activity first
    assert a_other == []
    b_primary, b_other = buckets(bob)
    assert set(b_primary) == {t1, t3}  # direct assignment and department match
    assert b_other == [t2]  # group membership only
    r_primary, r_other = buckets(root)
    assert not (set(r_primary) | set(r_other)) & {t1, t2, t3}  # admin role grants no visibility


def test_bucket_query_filters_the_response(api):
    headers = login(api.client)
    assert set(api.client.get("/api/v1/threads?bucket=primary", headers=headers).json()) == {"primary"}
    assert set(api.client.get("/api/v1/threads?bucket=other", headers=headers).json()) == {"other"}
    assert api.client.get("/api/v1/threads?bucket=mine", headers=headers).status_code == 422


def test_summary_omits_messages_detail_includes_them(api):
    headers = login(api.client)
    tid = make_thread(api, headers)["id"]
    api.client.post(f"/api/v1/threads/{tid}/messages", json={"body": "hello"}, headers=headers)
    [summary] = api.client.get("/api/v1/threads?bucket=primary", headers=headers).json()["primary"]
    assert set(summary) == {
        "id",
        "kind",
        "creator",
        "created_at",
        "case_form",
        "assignments",
        "status",
        "stub",
        "last_activity",
        "message_count",
        "specialization",
    }
    assert summary["message_count"] == 1
    assert summary["specialization"] == "urology"
    detail = api.client.get(f"/api/v1/threads/{tid}", headers=headers).json()["thread"]
    assert [m["body"] for m in detail["messages"]] == ["hello"]
    assert summary["last_activity"] == detail["messages"][0]["at"]


def test_thread_json_never_carries_identifying_fields(api):
    headers = login(api.client)
    tid = make_thread(api, headers, target={"doctor": "bob"})["id"]
    api.client.post(f"/api/v1/threads/{tid}/messages", json={"body": "62F, dysuria"}, headers=headers)
    detail = api.client.get(f"/api/v1/threads/{tid}", headers=headers).json()["thread"]
    assert set(detail["case_form"]) == {
        "age_band",
        "sex",
        "clinical_history",
        "specialization_requested",
        "attachments",
    }
    forbidden = {
        "name",
        "patient",
        "patient_name",
        "patient_id",
        "dob",
        "date_of_birth",
        "address",
        "phone",
        "mrn",
        "folder_number",
        "national_id",
        "nhis",
    }

    def walk(node, path):
        if isinstance(node, dict):
            for k, v in node.items():
                assert k.lower() not in forbidden, f"{path}.{k}"
                walk(v, f"{path}.{k}")
        elif isinstance(node, list):
            for i, v in enumerate(node):
                walk(v, f"{path}[{i}]")

    walk(detail, "thread")


def test_get_unknown_thread_is_404(api):
    headers = login(api.client)
    resp = api.client.get("/api/v1/threads/t-ghost", headers=headers)
    assert resp.status_code == 404


# -- messages -------------------------------------------------------------------


def test_message_author_comes_from_the_session(api):
    headers = login(api.client)
    tid = make_thread(api, headers)["id"]
    resp = api.client.post(
        f"/api/v1/threads/{tid}/messages",
        json={"body": "ultrasound attached", "author": "mallory"},
        headers=headers,
    )
    assert resp.status_code == 200
    msg = resp.json()["message"]
    assert msg["author"] == "alice"
    assert msg["thread"] == tid
    assert msg["id"].startswith("m-")
    detail = api.client.get(f"/api/v1/threads/{tid}", headers=headers).json()["thread"]
    assert [m["id"] for m in detail["messages"]] == [msg["id"]]


def test_message_keeps_a_caller_chosen_id(api):
    headers = login(api.client)
    tid = make_thread(api, headers)["id"]
    resp = api.client.post(
        f"/api/v1/threads/{tid}/messages", json={"id": "m-draft-7", "body": "x"}, headers=headers
    )
    assert resp.json()["message"]["id"] == "m-draft-7"


def test_message_to_unknown_thread_is_unprocessable(api):
    headers = login(api.client)
    resp = api.client.post("/api/v1/threads/t-ghost/messages", json={"body": "x"}, headers=headers)
    assert resp.status_code == 422
    assert "unknown thread" in resp.json()["detail"]


@pytest.mark.parametrize(
    "payload",
    [
        {},  # typo'd body key would land here and vanish silently
        {"text": "hello"},
        {"body": "   "},
        {"body": {"text": "hi"}},
        {"body": "x-ray attached", "attachments": "scan.png"},
    ],
)
def test_blank_or_mis_shaped_messages_are_rejected(api, payload):
    headers = login(api.client)
    tid = make_thread(api, headers)["id"]
    resp = api.client.post(f"/api/v1/threads/{tid}/messages", json=payload, headers=headers)
    assert resp.status_code == 422
    detail = api.client.get(f"/api/v1/threads/{tid}", headers=headers).json()["thread"]
    assert detail["messages"] == []


def test_attachment_only_message_is_legal(api):
    headers = login(api.client)
    tid = make_thread(api, headers)["id"]
    resp = api.client.post(
        f"/api/v1/threads/{tid}/messages",
        json={"body": "", "attachments": ["pelvic-ultrasound.png"]},
        headers=headers,
    )
    assert resp.status_code == 200
    assert resp.json()["message"]["attachments"] == ["pelvic-ultrasound.png"]


# -- re-routing and escalation ----------------------------------------------------


def test_assignment_authorization_follows_the_assignee_chain(api):
    alice = login(api.client)
    carol = login(api.client, "carol", "carol-pw")
    root = login(api.client, "root", "root-pw")
    tid = make_thread(api, alice, target={"group": "g-uro"})["id"]
    denied = api.client.post(
        f"/api/v1/threads/{tid}/assignments", json={"target": {"doctor": "bob"}}, headers=root
    )
    assert denied.status_code == 403
    assert "creator or an existing assignee" in denied.json()["detail"]
    # carol sits in the target group, so she may pass the case onward
    ok = api.client.post(
        f"/api/v1/threads/{tid}/assignments", json={"target": {"doctor": "bob"}}, headers=carol
    )
    assert ok.status_code == 200
    doc = ok.json()["thread"]
    assert [a["target"] for a in doc["assignments"]] == [{"group": "g-uro"}, {"doctor": "bob"}]
    assert doc["assignments"][1]["assigned_by"] == "carol"


def test_assignment_error_mapping(api):
    headers = login(api.client)
    resp = api.client.post(
        "/api/v1/threads/t-ghost/assignments", json={"target": {"doctor": "bob"}}, headers=headers
    )
    assert resp.status_code == 404
    tid = make_thread(api, headers)["id"]
    resp = api.client.post(
        f"/api/v1/threads/{tid}/assignments", json={"target": {"doctor": "nobody"}}, headers=headers
    )
    assert resp.status_code == 422
    resp = api.client.post(f"/api/v1/threads/{tid}/assignments", json={"target": {"ward": "w"}}, headers=headers)
    assert resp.status_code == 422
    resp = api.client.post(
        f"/api/v1/threads/{tid}/assignments", json={"target": {"department": "urology"}}, headers=headers
    )
    assert resp.status_code == 422  # mis-shapes are 422s, never 500s


def test_escalation_is_one_way_and_creator_only(api):
    alice = login(api.client)
    bob = login(api.client, "bob", "bob-pw")
    tid = make_thread(api, alice, target={"doctor": "bob"})["id"]
    api.client.post(f"/api/v1/threads/{tid}/messages", json={"body": "worsening"}, headers=bob)

    denied = api.client.post(f"/api/v1/threads/{tid}/escalate", headers=bob)
    assert denied.status_code == 403

    doc = api.client.post(f"/api/v1/threads/{tid}/escalate", headers=alice).json()["thread"]
    assert (doc["kind"], doc["status"]) == ("referral", "escalated")
    assert len(doc["assignments"]) == 1  # history survives the kind change
    assert [m["body"] for m in doc["messages"]] == ["worsening"]

    again = api.client.post(f"/api/v1/threads/{tid}/escalate", headers=alice)
    assert again.status_code == 409
    assert "already a referral" in again.json()["detail"]


def test_discussions_do_not_escalate(api):
    headers = login(api.client)
    resp = api.client.post("/api/v1/threads", json={"thread": {"kind": "discussion"}}, headers=headers)
    tid = resp.json()["thread"]["id"]
    out = api.client.post(f"/api/v1/threads/{tid}/escalate", headers=headers)
    assert out.status_code == 409
    assert "cannot escalate" in out.json()["detail"]


def test_escalate_unknown_thread_is_404(api):
    headers = login(api.client)
    assert api.client.post("/api/v1/threads/t-ghost/escalate", headers=headers).status_code == 404


# -- routing directory -------------------------------------------------------------


def test_consultant_directory_ranks_matching_groups_first(api):
    headers = login(api.client)
    body = api.client.get("/api/v1/consultants?specialty=urology", headers=headers).json()
    [bob] = body["colleagues"]
    assert bob == {
        "doctor": "bob",
        "name": "Bob Quartey",
        "specialties": ["urology"],
        "hospital": "h1",
        "country": "GH",
    }
    assert body["groups"][0] == "g-uro"
    assert body["group_names"]["g-uro"] == "Urology forum"
    # departments walk the referral chain upward from the caller's hospital
    assert body["departments"] == [["h1", "radiology"], ["h1", "urology"]]


def test_consultant_specialty_filter_prunes_colleagues(api):
    headers = login(api.client)
    body = api.client.get("/api/v1/consultants?specialty=radiology", headers=headers).json()
    assert body["colleagues"] == []
    assert body["groups"] == ["g-uro"]  # non-matching groups are listed, just not first


def test_consultants_at_the_apex_see_no_departments(api):
    bob = login(api.client, "bob", "bob-pw")
    body = api.client.get("/api/v1/consultants", headers=bob).json()
    assert body["departments"] == []  # teaching hospital: nothing above it


def test_colleague_list_round_trips_through_the_api(api):
    headers = login(api.client)

    def ids():
        listed = api.client.get("/api/v1/colleagues", headers=headers).json()["colleagues"]
        return [d["id"] for d in listed]

    assert ids() == ["bob"]
    assert api.client.put("/api/v1/colleagues", json={"to": "carol"}, headers=headers).json() == {"ok": True}
    assert ids() == ["bob", "carol"]
    api.client.put("/api/v1/colleagues", json={"to": "bob", "present": False}, headers=headers)
    assert ids() == ["carol"]


def test_colleague_put_rejects_unknown_and_self_edges(api):
    headers = login(api.client)
    assert api.client.put("/api/v1/colleagues", json={"to": "nobody"}, headers=headers).status_code == 422
    assert api.client.put("/api/v1/colleagues", json={"to": "alice"}, headers=headers).status_code == 422


def test_membership_toggle_round_trips(api):
    headers = login(api.client)
    [g] = api.client.get("/api/v1/memberships", headers=headers).json()["groups"]
    assert g == {
        "id": "g-uro",
        "name": "Urology forum",
        "kind": "specialty",
        "affiliation": "urology",
        "member": False,
    }
    api.client.put("/api/v1/memberships", json={"group": "g-uro"}, headers=headers)
    [g] = api.client.get("/api/v1/memberships", headers=headers).json()["groups"]
    assert g["member"] is True
    api.client.put("/api/v1/memberships", json={"group": "g-uro", "member": False}, headers=headers)
    [g] = api.client.get("/api/v1/memberships", headers=headers).json()["groups"]
    assert g["member"] is False


def test_membership_put_unknown_group_is_unprocessable(api):
    headers = login(api.client)
    resp = api.client.put("/api/v1/memberships", json={"group": "g-ghost"}, headers=headers)
    assert resp.status_code == 422


# -- sync status --------------------------------------------------------------------


def test_sync_status_reports_retry_bookkeeping(api):
    headers = login(api.client)
    assert api.client.get("/api/v1/sync/status", headers=headers).json() == {"stale": False, "peers": {}}

    other = ReplicationEngine("kumasi", now_ms=ManualClock())
    assert api.engine.sync_round("kumasi", LoopbackTransport(other)).ok
    assert not api.engine.sync_round("tamale", DownTransport()).ok
    body = api.client.get("/api/v1/sync/status", headers=headers).json()
    assert body["stale"] is False
    assert body["peers"]["kumasi"] == {
        "last_success_ms": 1_000_000,
        "stale": False,
        "consecutive_failures": 0,
        "next_retry_ms": 0,
    }
    tamale = body["peers"]["tamale"]
    assert tamale["consecutive_failures"] == 1
    assert tamale["next_retry_ms"] == 1_000_000 + 30_000


def test_sync_status_flags_stale_peers_on_read(api):
    headers = login(api.client)
    other = ReplicationEngine("kumasi", now_ms=ManualClock())
    api.engine.sync_round("kumasi", LoopbackTransport(other))
    api.engine_clock.advance(24 * 3600 * 1000)  # exactly at the threshold: still fresh
    body = api.client.get("/api/v1/sync/status", headers=headers).json()
    assert body["stale"] is False
    assert body["peers"]["kumasi"]["stale"] is False
    api.engine_clock.advance(1)  # one millisecond past: stale
    body = api.client.get("/api/v1/sync/status", headers=headers).json()
    assert body["stale"] is True
    assert body["peers"]["kumasi"]["stale"] is True


# -- admin --------------------------------------------------------------------------


def test_admin_endpoints_require_the_admin_role(api):
    alice = login(api.client)
    for path in ("users", "hospitals", "groups"):
        resp = api.client.post(f"/api/v1/admin/{path}", json={}, headers=alice)
        assert resp.status_code == 403, path
        assert "administrator role required" in resp.json()["detail"]


def test_admin_provisions_hospital_user_and_group(api):
    root = login(api.client, "root", "root-pw")
    ok = api.client.post(
        "/api/v1/admin/hospitals",
        json={
            "hospital": {
                "id": "h3",
                "name": "Nyaho Clinic",
                "tier": "private",
                "region": "Greater Accra",
                "country": "GH",
            }
        },
        headers=root,
    )
    assert ok.status_code == 200 and ok.json() == {"hospital": "h3"}
    ok = api.client.post(
        "/api/v1/admin/users",
        json={"doctor": {"id": "esi", "display_name": "Esi Owusu", "hospital": "h3"}, "secret": "esi-pw"},
        headers=root,
    )
    assert ok.status_code == 200 and ok.json() == {"doctor": "esi"}
    ok = api.client.post(
        "/api/v1/admin/groups",
        json={"group": {"id": "g-ortho", "name": "Ortho circle", "kind": "specialty", "affiliation": "orthopaedics"}},
        headers=root,
    )
    assert ok.status_code == 200 and ok.json() == {"group": "g-ortho"}
    # the new account can log in straight away
    esi = login(api.client, "esi", "esi-pw")
    assert api.client.get("/api/v1/me", headers=esi).json()["doctor"]["hospital"] == "h3"


def test_admin_rejects_duplicate_and_invalid_hospitals(api):
    root = login(api.client, "root", "root-pw")
    dup = api.client.post(
        "/api/v1/admin/hospitals",
        json={"hospital": {"id": "h1", "name": "Korle Bu", "tier": "teaching", "region": "Greater Accra", "country": "GH"}},
        headers=root,
    )
    assert dup.status_code == 409
    # a district hospital must hang off the referral hierarchy
    bad = api.client.post(
        "/api/v1/admin/hospitals",
        json={"hospital": {"id": "h4", "name": "Orphan District", "tier": "district", "region": "Volta", "country": "GH"}},
        headers=root,
    )
    assert bad.status_code == 422


# -- the peer sync wire ----------------------------------------------------------


def test_sync_endpoints_demand_matching_protocol(api):
    assert api.client.post("/sync/digest", json={}).status_code == 426
    resp = api.client.post("/sync/digest", json={}, headers=peer_headers(protocol="999"))
    assert resp.status_code == 426  # version outranks even a good secret


def test_sync_endpoints_demand_the_shared_secret(api):
    resp = api.client.post("/sync/digest", json={}, headers=peer_headers(secret="wrong"))
    assert resp.status_code == 401
    # a server with no secret configured refuses peers outright
    eng, _ = build_engine("kumasi")
    bare = TestClient(create_app(ServerConfig(server_id="kumasi", test_mode=True), eng))
    resp = bare.post("/sync/digest", json={}, headers=peer_headers())
    assert resp.status_code == 401
    assert "not configured" in resp.json()["detail"]


def test_digest_reply_carries_exactly_the_missing_events(api):
    body = api.client.post("/sync/digest", json={}, headers=peer_headers()).json()
    assert body["vv"] == api.engine.digest()
    assert len(body["events"]) == len(api.engine.all_events())
    # a peer that already has everything gets an empty delta
    body = api.client.post("/sync/digest", json=api.engine.digest(), headers=peer_headers()).json()
    assert body["events"] == []


def test_delta_applies_events_and_rejects_malformed_ones(api):
    resp = api.client.post("/sync/delta", json=[{"origin": "x"}], headers=peer_headers())
    assert resp.status_code == 422
    ev = mk_event("kumasi", 1, 2_000_000, "EdgeAdded", {"from": "alice", "to": "carol"})
    resp = api.client.post("/sync/delta", json=[ev.to_dict()], headers=peer_headers())
    assert resp.json() == {"applied": 1}
    # idempotent: the same event a second time is a no-op
    resp = api.client.post("/sync/delta", json=[ev.to_dict()], headers=peer_headers())
    assert resp.json() == {"applied": 0}
    assert "carol" in api.engine.snapshot().out_neighbors("alice")


def test_http_transport_converges_a_fresh_peer(api):
    eng_b = ReplicationEngine("kumasi", now_ms=ManualClock())
    transport = HttpSyncTransport("http://testserver", peer_secret=PEER_SECRET, client=TestClient(api.app))
    result = eng_b.sync_round("accra", transport)
    assert result.ok
    assert result.received == len(api.engine.all_events())
    assert eng_b.state_hash() == api.engine.state_hash()

    # and the push direction: a local commit lands on the server next round
    eng_b.commit("EdgeAdded", {"from": "bob", "to": "carol"})
    result = eng_b.sync_round("accra", transport)
    assert result.ok and result.sent == 1
    assert eng_b.state_hash() == api.engine.state_hash()


def test_http_transport_surfaces_protocol_mismatch(api):
    transport = HttpSyncTransport("http://testserver", peer_secret=PEER_SECRET, client=TestClient(api.app))
    transport._headers[PROTOCOL_HEADER] = "999"  # a future wire revision
    with pytest.raises(ProtocolMismatchError):
        transport.exchange_digest({})


def test_http_transport_wraps_http_failures(api):
    eng, _ = build_engine("kumasi")
    bare = TestClient(create_app(ServerConfig(server_id="kumasi", test_mode=True), eng))
    transport = HttpSyncTransport("http://testserver", peer_secret=PEER_SECRET, client=bare)
    with pytest.raises(TransportError) as err:
        transport.exchange_digest({})
    assert "401" in str(err.value)


def test_http_transport_wraps_network_failures():
    def down(request):
        raise httpx.ConnectError("nothing listening")

    transport = HttpSyncTransport(
        "http://peer.invalid", client=httpx.Client(transport=httpx.MockTransport(down))
    )
    with pytest.raises(TransportError):
        transport.exchange_digest({})


def test_http_transport_rejects_garbled_digest_replies():
    reply = httpx.MockTransport(
        lambda request: httpx.Response(200, json={"vv": {}, "events": [{"half": "an event"}]})
    )
    transport = HttpSyncTransport("http://peer.invalid", client=httpx.Client(transport=reply))
    with pytest.raises(TransportError) as err:
        transport.exchange_digest({})
    assert "bad digest reply" in str(err.value)

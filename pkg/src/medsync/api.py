"""HTTP/JSON facade: human endpoints under /api/v1, peer sync at /sync.

Accounts are created by administrators only; every data endpoint needs a
session token, and peer sync needs the shared peer secret, so anonymous
requests can never observe case content. Request handlers are stateless
over engine snapshots; mutations serialize through the engine commit lock.
"""

from __future__ import annotations

import hashlib
import os
import secrets
import threading
import time
import uuid
from collections import deque
from typing import Dict, List, Optional

import httpx
from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query

from .config import ServerConfig
from .engine import (
    PROTOCOL_VERSION,
    CommitValidationError,
    DigestReply,
    DuplicateIdError,
    ProtocolMismatchError,
    ReplicationEngine,
    TransportError,
)
from .events import Event, MalformedEventError
from .model import Target, UnknownDoctorError, partition_cases
from .notify import Dispatcher
from .routing import (
    AuthorizationError,
    EscalationError,
    RoutingError,
    assign_thread,
    candidate_consultants,
    escalate_thread,
    set_colleague,
    set_membership,
)

PROTOCOL_HEADER = "X-Medsync-Protocol"
PEER_SECRET_HEADER = "X-Medsync-Peer-Secret"
SESSION_TTL_S = 24 * 3600
LOGIN_FAILURE_LIMIT = 5  # failures per account per minute
LOGIN_FAILURE_WINDOW_S = 60
_PBKDF2_ITERATIONS = 50_000


def make_credential(secret: str) -> dict:
    salt = os.urandom(16)
    digest = hashlib.pbkdf2_hmac("sha256", secret.encode("utf-8"), salt, _PBKDF2_ITERATIONS)
    return {
        "algo": "pbkdf2_sha256",
        "salt": salt.hex(),
        "iterations": _PBKDF2_ITERATIONS,
        "hash": digest.hex(),
    }


def verify_credential(credential: dict, secret: str) -> bool:
    if not credential or credential.get("algo") != "pbkdf2_sha256":
        return False
    try:
        digest = hashlib.pbkdf2_hmac(
            "sha256",
            secret.encode("utf-8"),
            bytes.fromhex(credential["salt"]),
            int(credential["iterations"]),
        )
    except (KeyError, ValueError):
        return False
    return secrets.compare_digest(digest.hex(), credential["hash"])


class HttpSyncTransport:
    """Client side of the sync wire protocol; raises TransportError on any
    network-level failure so the engine's backoff takes over."""

    def __init__(self, url: str, peer_secret: Optional[str] = None, client: Optional[httpx.Client] = None, timeout: float = 30.0):
        self.url = url.rstrip("/")
        self._headers = {PROTOCOL_HEADER: str(PROTOCOL_VERSION)}
        if peer_secret:
            self._headers[PEER_SECRET_HEADER] = peer_secret
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload) -> httpx.Response:
        try:
            resp = self._client.post(self.url + path, json=payload, headers=self._headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"{self.url}{path}: {exc}")
        if resp.status_code == 426:
            raise ProtocolMismatchError(f"{self.url}{path}: protocol version mismatch")
        if resp.status_code != 200:
            raise TransportError(f"{self.url}{path}: HTTP {resp.status_code}")
        return resp

    def exchange_digest(self, vv):
        data = self._post("/sync/digest", vv).json()
        try:
            events = [Event.from_dict(e) for e in data["events"]]
            return_vv = dict(data["vv"])
        except (KeyError, TypeError, MalformedEventError) as exc:
            raise TransportError(f"bad digest reply: {exc}")
        return DigestReply(vv=return_vv, events=events)

    def push_delta(self, events) -> int:
        data = self._post("/sync/delta", [e.to_dict() for e in events]).json()
        return int(data.get("applied", 0))


def _thread_summary(thread) -> dict:
    doc = thread.to_dict()
    doc["last_activity"] = thread.last_activity.encode()
    doc["message_count"] = len(thread.messages)
    doc["specialization"] = thread.specialization
    return doc


def _thread_detail(thread) -> dict:
    doc = _thread_summary(thread)
    doc["messages"] = [m.to_dict() for m in thread.messages]
    return doc


def create_app(
    cfg: ServerConfig,
    engine: ReplicationEngine,
    dispatcher: Optional[Dispatcher] = None,
    now_s=time.time,
    lock: Optional[threading.RLock] = None,
) -> FastAPI:
    app = FastAPI(title="medsync", docs_url=None, redoc_url=None)
    lock = lock if lock is not None else threading.RLock()
    sessions: Dict[str, dict] = {}
    login_failures: Dict[str, deque] = {}
    app.state.engine = engine
    app.state.config = cfg
    app.state.dispatcher = dispatcher
    app.state.sessions = sessions

    def snapshot():
        with lock:
            return engine.snapshot()

    def require_session(authorization: Optional[str] = Header(None)) -> dict:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization[len("Bearer "):].strip()
        session = sessions.get(token)
        if session is None or session["expires_at"] <= now_s():
            sessions.pop(token, None)
            raise HTTPException(status_code=401, detail="invalid or expired session")
        return session

    def require_admin(session: dict = Depends(require_session)) -> dict:
        doctor = snapshot().doctors.get(session["doctor"])
        if doctor is None or not doctor.is_admin:
            raise HTTPException(status_code=403, detail="administrator role required")
        return session

    def require_peer(
        x_medsync_protocol: Optional[str] = Header(None),
        x_medsync_peer_secret: Optional[str] = Header(None),
    ) -> None:
        if x_medsync_protocol != str(PROTOCOL_VERSION):
            raise HTTPException(status_code=426, detail=f"protocol {PROTOCOL_VERSION} required")
        expected = cfg.peer_secret
        if not expected:
            raise HTTPException(status_code=401, detail="peer sync not configured")
        if not secrets.compare_digest(str(x_medsync_peer_secret or ""), str(expected)):
            raise HTTPException(status_code=401, detail="bad peer secret")

    def _commit_errors(exc: Exception) -> HTTPException:
        if isinstance(exc, DuplicateIdError):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, CommitValidationError):
            return HTTPException(status_code=422, detail=str(exc))
        if isinstance(exc, AuthorizationError):
            return HTTPException(status_code=403, detail=str(exc))
        if isinstance(exc, EscalationError):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, (RoutingError, UnknownDoctorError)):
            return HTTPException(status_code=404, detail=str(exc))
        raise exc

    # -- auth -----------------------------------------------------------------

    @app.post("/api/v1/login")
    def login(payload: dict = Body(...)):
        doctor_id = str(payload.get("doctor", ""))
        secret = str(payload.get("secret", ""))
        now = now_s()
        failures = login_failures.setdefault(doctor_id, deque())
        while failures and failures[0] <= now - LOGIN_FAILURE_WINDOW_S:
            failures.popleft()
        if len(failures) >= LOGIN_FAILURE_LIMIT:
            raise HTTPException(status_code=429, detail="too many failed attempts; wait a minute")
        snap = snapshot()
        credential = snap.credentials.get(doctor_id)
        if doctor_id not in snap.doctors or not verify_credential(credential, secret):
            failures.append(now)
            raise HTTPException(status_code=401, detail="bad credentials")
        token = secrets.token_urlsafe(32)
        sessions[token] = {
            "token": token,
            "doctor": doctor_id,
            "issued_at": now,
            "expires_at": now + SESSION_TTL_S,
        }
        return {"token": token, "doctor": doctor_id, "expires_at": sessions[token]["expires_at"]}

    @app.get("/api/v1/me")
    def me(session: dict = Depends(require_session)):
        doctor = snapshot().doctors.get(session["doctor"])
        if doctor is None:
            raise HTTPException(status_code=401, detail="account no longer exists")
        return {"doctor": doctor.to_dict()}

    # -- case lists and threads --------------------------------------------------

    @app.get("/api/v1/threads")
    def list_threads(
        bucket: Optional[str] = Query(None),
        session: dict = Depends(require_session),
    ):
        if bucket not in (None, "primary", "other"):
            raise HTTPException(status_code=422, detail="bucket must be primary or other")
        snap = snapshot()
        primary, other = partition_cases(
            session["doctor"], snap.doctors, snap.threads.values(), snap.groups.values()
        )
        out = {}
        if bucket in (None, "primary"):
            out["primary"] = [_thread_summary(t) for t in primary]
        if bucket in (None, "other"):
            out["other"] = [_thread_summary(t) for t in other]
        return out

    def _check_target(snap, target: Target) -> None:
        if target.kind == "doctor" and target.doctor not in snap.doctors:
            raise HTTPException(status_code=422, detail=f"unknown doctor target {target.doctor!r}")
        if target.kind == "group" and target.group not in snap.groups:
            raise HTTPException(status_code=422, detail=f"unknown group target {target.group!r}")
        if target.kind == "department":
            hospital = snap.hospitals.get(target.hospital or "")
            if hospital is None or target.specialty not in hospital.departments:
                raise HTTPException(status_code=422, detail="unknown department target")

    @app.post("/api/v1/threads")
    def create_thread(payload: dict = Body(...), session: dict = Depends(require_session)):
        thread = dict(payload.get("thread") or {})
        thread["creator"] = session["doctor"]
        thread.setdefault("id", "t-" + uuid.uuid4().hex[:12])
        raw_target = payload.get("target")
        target = None
        if raw_target is not None:
            try:
                target = Target.from_dict(raw_target)
            except (KeyError, TypeError):
                raise HTTPException(status_code=422, detail="target must name a doctor, group, or department")
        with lock:
            if target is not None:
                # the wizard submits thread + assignment as one step; reject
                # a bad target before the thread event lands in the log
                _check_target(engine.snapshot(), target)
            try:
                engine.commit("ThreadCreated", {"thread": thread})
                if target is not None:
                    assign_thread(engine, thread["id"], target, session["doctor"])
            except Exception as exc:
                raise _commit_errors(exc)
            snap = engine.snapshot()
        return {"thread": _thread_detail(snap.threads[thread["id"]])}

    @app.get("/api/v1/threads/{thread_id}")
    def get_thread(thread_id: str, session: dict = Depends(require_session)):
        thread = snapshot().threads.get(thread_id)
        if thread is None:
            raise HTTPException(status_code=404, detail="unknown thread")
        return {"thread": _thread_detail(thread)}

    @app.post("/api/v1/threads/{thread_id}/messages")
    def post_message(
        thread_id: str, payload: dict = Body(...), session: dict = Depends(require_session)
    ):
        body = payload.get("body", "")
        if not isinstance(body, str):
            raise HTTPException(status_code=422, detail="message body must be a string")
        attachments = payload.get("attachments") or []
        if not isinstance(attachments, list) or not all(isinstance(a, str) for a in attachments):
            raise HTTPException(status_code=422, detail="attachments must be a list of names")
        if not body.strip() and not attachments:
            # a mistyped body key must not silently post an empty message;
            # attachment-only messages stay legal
            raise HTTPException(status_code=422, detail="message needs text or an attachment")
        message = {
            "id": payload.get("id") or "m-" + uuid.uuid4().hex[:12],
            "thread": thread_id,
            "author": session["doctor"],
            "body": body,
            "attachments": attachments,
        }
        with lock:
            try:
                ev = engine.commit("MessageAdded", {"message": message})
            except Exception as exc:
                raise _commit_errors(exc)
        return {"message": ev.payload["message"]}

    @app.post("/api/v1/threads/{thread_id}/assignments")
    def post_assignment(
        thread_id: str, payload: dict = Body(...), session: dict = Depends(require_session)
    ):
        try:
            target = Target.from_dict(payload.get("target") or {})
        except (KeyError, TypeError):
            raise HTTPException(status_code=422, detail="target must name a doctor, group, or department")
        with lock:
            try:
                assign_thread(engine, thread_id, target, session["doctor"])
            except Exception as exc:
                raise _commit_errors(exc)
            snap = engine.snapshot()
        return {"thread": _thread_detail(snap.threads[thread_id])}

    @app.post("/api/v1/threads/{thread_id}/escalate")
    def post_escalate(thread_id: str, session: dict = Depends(require_session)):
        with lock:
            try:
                escalate_thread(engine, thread_id, session["doctor"])
            except Exception as exc:
                raise _commit_errors(exc)
            snap = engine.snapshot()
        return {"thread": _thread_detail(snap.threads[thread_id])}

    # -- routing directory ---------------------------------------------------------

    @app.get("/api/v1/consultants")
    def consultants(
        specialty: Optional[str] = Query(None), session: dict = Depends(require_session)
    ):
        snap = snapshot()
        try:
            cs = candidate_consultants(snap, session["doctor"], specialty)
        except UnknownDoctorError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "colleagues": [c.__dict__ for c in cs.colleagues],
            "groups": cs.groups,
            "group_names": {g.id: g.name for g in snap.groups.values()},
            "departments": [list(d) for d in cs.departments],
        }

    @app.get("/api/v1/colleagues")
    def get_colleagues(session: dict = Depends(require_session)):
        snap = snapshot()
        out = []
        for peer_id in sorted(snap.out_neighbors(session["doctor"])):
            peer = snap.doctors.get(peer_id)
            if peer is not None:
                out.append(peer.to_dict())
        return {"colleagues": out}

    @app.put("/api/v1/colleagues")
    def put_colleague(payload: dict = Body(...), session: dict = Depends(require_session)):
        with lock:
            try:
                set_colleague(
                    engine, session["doctor"], str(payload.get("to", "")), bool(payload.get("present", True))
                )
            except Exception as exc:
                raise _commit_errors(exc)
        return {"ok": True}

    @app.get("/api/v1/memberships")
    def get_memberships(session: dict = Depends(require_session)):
        snap = snapshot()
        groups = []
        for g in sorted(snap.groups.values(), key=lambda g: g.id):
            groups.append(
                {
                    "id": g.id,
                    "name": g.name,
                    "kind": g.kind,
                    "affiliation": g.affiliation,
                    "member": session["doctor"] in g.members,
                }
            )
        return {"groups": groups}

    @app.put("/api/v1/memberships")
    def put_membership(payload: dict = Body(...), session: dict = Depends(require_session)):
        with lock:
            try:
                set_membership(
                    engine, session["doctor"], str(payload.get("group", "")), bool(payload.get("member", True))
                )
            except Exception as exc:
                raise _commit_errors(exc)
        return {"ok": True}

    @app.get("/api/v1/sync/status")
    def sync_status(session: dict = Depends(require_session)):
        with lock:
            engine.staleness_check()
            statuses = engine.sync_statuses()
            overall = engine.overall_stale()
        return {
            "stale": overall,
            "peers": {
                p: {
                    "last_success_ms": s.last_success_ms,
                    "stale": s.stale,
                    "consecutive_failures": s.consecutive_failures,
                    "next_retry_ms": s.next_retry_ms,
                }
                for p, s in sorted(statuses.items())
            },
        }

    # -- admin -----------------------------------------------------------------

    @app.post("/api/v1/admin/users")
    def admin_create_user(payload: dict = Body(...), session: dict = Depends(require_admin)):
        doctor = payload.get("doctor") or {}
        body = {"doctor": doctor}
        if payload.get("secret"):
            body["credential"] = make_credential(str(payload["secret"]))
        with lock:
            try:
                engine.commit("UserCreated", body)
            except Exception as exc:
                raise _commit_errors(exc)
        return {"doctor": doctor.get("id")}

    @app.post("/api/v1/admin/hospitals")
    def admin_create_hospital(payload: dict = Body(...), session: dict = Depends(require_admin)):
        with lock:
            try:
                engine.commit("HospitalCreated", {"hospital": payload.get("hospital") or {}})
            except Exception as exc:
                raise _commit_errors(exc)
        return {"hospital": (payload.get("hospital") or {}).get("id")}

    @app.post("/api/v1/admin/groups")
    def admin_create_group(payload: dict = Body(...), session: dict = Depends(require_admin)):
        with lock:
            try:
                engine.commit("GroupCreated", {"group": payload.get("group") or {}})
            except Exception as exc:
                raise _commit_errors(exc)
        return {"group": (payload.get("group") or {}).get("id")}

    # -- peer sync --------------------------------------------------------------

    @app.post("/sync/digest")
    def sync_digest(vv: dict = Body(...), _: None = Depends(require_peer)):
        with lock:
            reply = engine.handle_digest({str(k): int(v) for k, v in vv.items()})
        return {"vv": reply.vv, "events": [e.to_dict() for e in reply.events]}

    @app.post("/sync/delta")
    def sync_delta(events: List[dict] = Body(...), _: None = Depends(require_peer)):
        try:
            parsed = [Event.from_dict(e) for e in events]
        except MalformedEventError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        with lock:
            applied = engine.apply(parsed)
        return {"applied": applied}

    return app

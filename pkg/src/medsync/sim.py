"""Deterministic virtual-time network simulator.

Runs N replication engines over scripted or generated link-outage traces,
with no wall-clock sleeps: a single heap of timed actions (workload
commits, sync attempts, staleness checks) drives everything, so a
week-long partition replays in milliseconds and bit-identically for a
fixed (topology, trace, workload, seed).

Outage regime defaults follow the measured pattern at the pilot sites:
short outages of 1 to 4 minutes recurring with 30 to 90 minute gaps all
day, plus 3 long outages of 30 to 90 minutes per week.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .engine import (
    CommitValidationError,
    DigestReply,
    ReplicationEngine,
    TransportError,
)
from .fixtures import fixture_events, load_fixture
from .notify import Dispatcher, MemoryTransport, WatchPreference
from .state import materialize, state_hash

MIN_MS = 60_000
HOUR_MS = 3_600_000
DAY_MS = 24 * HOUR_MS
WEEK_MS = 7 * DAY_MS

SHORT_DUR_RANGE_MS = (1 * MIN_MS, 4 * MIN_MS)
SHORT_GAP_RANGE_MS = (30 * MIN_MS, 90 * MIN_MS)
LONG_DUR_RANGE_MS = (30 * MIN_MS, 90 * MIN_MS)
LONG_PER_WEEK = 3.0

DEFAULT_SYNC_INTERVAL_MS = 5 * MIN_MS
DEFAULT_STALENESS_CHECK_MS = HOUR_MS
HARD_CAP_EXTRA_MS = 14 * DAY_MS


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class OutageInterval:
    start_ms: int
    duration_ms: int
    kind: str  # short | long | scripted

    @property
    def end_ms(self) -> int:
        return self.start_ms + self.duration_ms

    def to_dict(self) -> dict:
        return {"start_ms": self.start_ms, "duration_ms": self.duration_ms, "kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "OutageInterval":
        return cls(int(d["start_ms"]), int(d["duration_ms"]), d.get("kind", "scripted"))


def link_key(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass
class OutageTrace:
    horizon_ms: int
    links: Dict[Tuple[str, str], List[OutageInterval]] = field(default_factory=dict)

    def intervals(self, a: str, b: str) -> List[OutageInterval]:
        return self.links.get(link_key(a, b), [])

    def is_down(self, a: str, b: str, t: int) -> bool:
        for iv in self.intervals(a, b):
            if iv.start_ms <= t < iv.end_ms:
                return True
        return False

    def normalized(self, a: str, b: str) -> List[OutageInterval]:
        """Kind-blind merge into disjoint intervals (for invariant checks)."""
        merged: List[OutageInterval] = []
        for iv in sorted(self.intervals(a, b), key=lambda i: (i.start_ms, i.end_ms)):
            if merged and iv.start_ms <= merged[-1].end_ms:
                prev = merged[-1]
                end = max(prev.end_ms, iv.end_ms)
                merged[-1] = OutageInterval(prev.start_ms, end - prev.start_ms, "merged")
            else:
                merged.append(OutageInterval(iv.start_ms, iv.duration_ms, "merged"))
        return merged

    def to_dict(self) -> dict:
        return {
            "horizon_ms": self.horizon_ms,
            "links": {
                f"{a}~{b}": [iv.to_dict() for iv in ivs] for (a, b), ivs in sorted(self.links.items())
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OutageTrace":
        links = {}
        for name, ivs in d.get("links", {}).items():
            a, _, b = name.partition("~")
            links[link_key(a, b)] = [OutageInterval.from_dict(iv) for iv in ivs]
        return cls(horizon_ms=int(d["horizon_ms"]), links=links)


def _disjoint_placement(rng: random.Random, durations: List[int], horizon_ms: int) -> List[int]:
    """Starts for non-overlapping intervals uniformly placed in the horizon."""
    total = sum(durations)
    free = horizon_ms - total
    if free < 0:
        raise ScenarioError("horizon too small for requested outages")
    offsets = sorted(int(rng.uniform(0, free)) for _ in durations)
    starts = []
    used = 0
    for off, dur in zip(offsets, durations):
        starts.append(off + used)
        used += dur
    return starts


def generate_outage_trace(
    seed,
    links: Iterable[Tuple[str, str]],
    horizon_ms: int,
    short_rate: float = 1.0,
    long_rate: float = LONG_PER_WEEK,
) -> OutageTrace:
    """Per-link outage schedule, deterministic for a fixed seed.

    short_rate scales how often short outages recur (1.0 = measured
    regime); long_rate is the expected count per simulated week.
    """
    if short_rate < 0 or long_rate < 0:
        raise ScenarioError("outage rates must be non-negative")
    if horizon_ms <= 0:
        raise ScenarioError("horizon must be positive")
    if (short_rate > 0 or long_rate > 0) and horizon_ms < SHORT_DUR_RANGE_MS[0]:
        raise ScenarioError("horizon too small for a single outage event")
    trace = OutageTrace(horizon_ms=horizon_ms)
    for a, b in sorted(link_key(*l) for l in links):
        intervals: List[OutageInterval] = []
        if short_rate > 0:
            rng = random.Random(f"{seed}/short/{a}~{b}")
            t = 0
            while True:
                t += int(rng.uniform(*SHORT_GAP_RANGE_MS) / short_rate)
                if t >= horizon_ms:
                    break
                dur = int(rng.uniform(*SHORT_DUR_RANGE_MS))
                dur = min(dur, horizon_ms - t)
                intervals.append(OutageInterval(t, dur, "short"))
                t += dur
        if long_rate > 0:
            rng = random.Random(f"{seed}/long/{a}~{b}")
            count = int(round(long_rate * horizon_ms / WEEK_MS))
            if count:
                durations = [int(rng.uniform(*LONG_DUR_RANGE_MS)) for _ in range(count)]
                starts = _disjoint_placement(rng, durations, horizon_ms)
                intervals.extend(
                    OutageInterval(s, d, "long") for s, d in zip(starts, durations)
                )
        trace.links[(a, b)] = sorted(intervals, key=lambda iv: (iv.start_ms, iv.end_ms))
    return trace


@dataclass
class ScenarioResult:
    converged: bool = False
    convergence_time_ms: Optional[int] = None
    max_divergence_window_ms: int = 0
    digest_history: Dict[str, List[Tuple[int, int]]] = field(default_factory=dict)
    notification_counts: Dict[str, int] = field(default_factory=dict)
    final_digests: Dict[str, dict] = field(default_factory=dict)
    final_state_hashes: Dict[str, str] = field(default_factory=dict)
    network_calls: List[tuple] = field(default_factory=list)  # (t, src, dst, op)
    commits: List[tuple] = field(default_factory=list)  # (t, server, kind, ok)
    skipped_commits: int = 0
    end_time_ms: int = 0
    sim: Optional["Simulation"] = None  # in-process inspection; not serialized

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "convergence_time_ms": self.convergence_time_ms,
            "max_divergence_window_ms": self.max_divergence_window_ms,
            "digest_history": {s: [list(e) for e in h] for s, h in self.digest_history.items()},
            "notification_counts": dict(self.notification_counts),
            "final_digests": self.final_digests,
            "final_state_hashes": self.final_state_hashes,
            "network_calls": [list(c) for c in self.network_calls],
            "commits": [list(c) for c in self.commits],
            "skipped_commits": self.skipped_commits,
            "end_time_ms": self.end_time_ms,
        }


class _LinkTransport:
    """Transport from src to dst that honors the outage trace."""

    def __init__(self, sim: "Simulation", src: str, dst: str):
        self.sim = sim
        self.src = src
        self.dst = dst

    def _check(self) -> None:
        if self.sim.trace.is_down(self.src, self.dst, self.sim.now):
            raise TransportError(f"link {self.src}~{self.dst} down")

    def exchange_digest(self, vv) -> DigestReply:
        self._check()
        self.sim.record_call(self.src, self.dst, "digest")
        return self.sim.engines[self.dst].handle_digest(vv)

    def push_delta(self, events) -> int:
        self._check()
        self.sim.record_call(self.src, self.dst, "delta")
        return self.sim.engines[self.dst].handle_delta(events)


def _op_to_commit(op: dict) -> Tuple[str, dict]:
    name = op["op"]
    if name == "create_hospital":
        return "HospitalCreated", {"hospital": op["hospital"]}
    if name == "create_user":
        payload = {"doctor": op["doctor"]}
        if op.get("credential"):
            payload["credential"] = op["credential"]
        return "UserCreated", payload
    if name == "create_group":
        return "GroupCreated", {"group": op["group"]}
    if name == "membership":
        return "MembershipChanged", {
            "doctor": op["doctor"],
            "group": op["group"],
            "member": bool(op["member"]),
        }
    if name == "edge":
        kind = "EdgeAdded" if op.get("present", True) else "EdgeRemoved"
        return kind, {"from": op["from"], "to": op["to"]}
    if name == "create_thread":
        return "ThreadCreated", {"thread": op["thread"]}
    if name == "message":
        return "MessageAdded", {"message": op["message"]}
    if name == "assign":
        return "AssignmentAdded", {
            "thread": op["thread"],
            "assignment": {"target": op["target"], "assigned_by": op["assigned_by"]},
        }
    if name == "escalate":
        return "StatusChanged", {"thread": op["thread"], "status": "escalated", "kind": "referral"}
    if name == "raw":
        return op["kind"], op["payload"]
    raise ScenarioError(f"unknown workload op {name!r}")


class Simulation:
    def __init__(
        self,
        topology: dict,
        trace: OutageTrace,
        workload: List[dict],
        seed,
        sync_interval_ms: int = DEFAULT_SYNC_INTERVAL_MS,
        bootstrap: Optional[List[dict]] = None,
        stub_channel: Optional[dict] = None,
        homed: Optional[Dict[str, List[str]]] = None,
        staleness_threshold_ms: int = 24 * HOUR_MS,
        notify_servers: Optional[List[str]] = None,
    ):
        self.servers: List[str] = list(topology["servers"])
        if not self.servers:
            raise ScenarioError("topology needs at least one server")
        self.links = sorted({link_key(a, b) for a, b in topology.get("links", [])})
        peers_cfg = topology.get("peers")
        if peers_cfg:
            self.peers = {s: sorted(peers_cfg.get(s, [])) for s in self.servers}
        else:
            self.peers = {s: [] for s in self.servers}
            for a, b in self.links:
                self.peers[a].append(b)
                self.peers[b].append(a)
            self.peers = {s: sorted(set(p)) for s, p in self.peers.items()}
        self.trace = trace
        self.workload = sorted(workload, key=lambda op: int(op["at"]))
        self.seed = seed
        self.sync_interval_ms = sync_interval_ms
        self.now = 0
        self.result = ScenarioResult(sim=self)
        self.engines: Dict[str, ReplicationEngine] = {
            s: ReplicationEngine(
                s, now_ms=self._clock, staleness_threshold_ms=staleness_threshold_ms
            )
            for s in self.servers
        }
        self.dispatchers: Dict[str, Dispatcher] = {}
        self._heap: List[tuple] = []
        self._push_counter = 0
        self._rng = random.Random(f"{seed}/sim")
        self._stub_rng = random.Random(f"{seed}/stubs")
        self._stub_cfg = stub_channel or {}
        self._homed = homed or {}
        self._divergence_started: Optional[int] = None
        self._last_workload_ms = int(self.workload[-1]["at"]) if self.workload else 0
        self._bootstrap(bootstrap or [])
        self._setup_notifications(notify_servers)
        self._setup_stub_channel()
        for s in self.servers:
            for p in self.peers[s]:
                self.engines[s].register_peer(p)
                self._push(int(self._rng.uniform(0, sync_interval_ms)), "sync", (s, p))
            self._push(DEFAULT_STALENESS_CHECK_MS, "staleness", s)
        for op in self.workload:
            self._push(int(op["at"]), "op", op)

    # -- wiring ------------------------------------------------------------

    def _clock(self) -> int:
        return self.now

    def _push(self, t: int, kind: str, data) -> None:
        self._push_counter += 1
        heapq.heappush(self._heap, (t, self._push_counter, kind, data))

    def _bootstrap(self, ops: List[dict]) -> None:
        """Pre-seed every server with an identical already-synced history."""
        if not ops:
            return
        seeder = ReplicationEngine("fixture", now_ms=self._clock)
        for op in ops:
            kind, payload = _op_to_commit(op)
            seeder.commit(kind, payload)
        events = seeder.all_events()
        for s in self.servers:
            self.engines[s].apply(events)

    def _setup_notifications(self, notify_servers: Optional[List[str]]) -> None:
        targets = notify_servers if notify_servers is not None else sorted(self._homed)
        for s in targets:
            if s not in self.engines:
                raise ScenarioError(f"notify server {s!r} not in topology")
            dispatcher = Dispatcher(
                homed=self._homed.get(s, []),
                transports={"email": MemoryTransport(), "sms": MemoryTransport()},
                now_ms=self._clock,
            )
            for doctor in self._homed.get(s, []):
                dispatcher.set_preference(
                    WatchPreference(doctor, scope="primary_and_other", channels=("email", "sms"))
                )
            engine = self.engines[s]
            engine.add_apply_hook(dispatcher.on_events)
            engine.add_staleness_hook(dispatcher.on_staleness)
            self.dispatchers[s] = dispatcher

    def _setup_stub_channel(self) -> None:
        if not self._stub_cfg.get("enabled"):
            return
        loss = float(self._stub_cfg.get("loss", 0.0))
        for s in self.servers:
            self.engines[s].attach_stub_channel(
                lambda wire, src=s: self._deliver_stub(src, wire, loss)
            )

    def _deliver_stub(self, src: str, wire: bytes, loss: float) -> None:
        # Out-of-band channel: works during link outages, but lossy.
        for dst in self.servers:
            if dst == src:
                continue
            if self._stub_rng.random() < loss:
                continue
            self.engines[dst].ingest_stub_wire(wire)

    # -- bookkeeping ---------------------------------------------------------

    def record_call(self, src: str, dst: str, op: str) -> None:
        self.result.network_calls.append((self.now, src, dst, op))

    def _digests_equal(self) -> bool:
        first = None
        for s in self.servers:
            d = self.engines[s].digest()
            if first is None:
                first = d
            elif d != first:
                return False
        return True

    def _note_progress(self) -> None:
        for s in self.servers:
            applied = self.engines[s].applied_total
            hist = self.result.digest_history.setdefault(s, [])
            if not hist or hist[-1][1] != applied:
                hist.append((self.now, applied))
        equal = self._digests_equal()
        if equal:
            if self._divergence_started is not None:
                window = self.now - self._divergence_started
                if window > self.result.max_divergence_window_ms:
                    self.result.max_divergence_window_ms = window
                self._divergence_started = None
        else:
            if self._divergence_started is None:
                self._divergence_started = self.now

    # -- actions ------------------------------------------------------------

    def _run_op(self, op: dict) -> None:
        server = op["server"]
        engine = self.engines.get(server)
        if engine is None:
            raise ScenarioError(f"workload references unknown server {server!r}")
        kind, payload = _op_to_commit(op)
        try:
            engine.commit(kind, payload)
            self.result.commits.append((self.now, server, kind, True))
        except CommitValidationError:
            # e.g. an op referencing state that has not replicated here yet;
            # deterministic, so recorded rather than fatal
            self.result.commits.append((self.now, server, kind, False))
            self.result.skipped_commits += 1

    def _run_sync(self, server: str, peer: str) -> None:
        engine = self.engines[server]
        status = engine.peer_status(peer)
        if self.now >= status.next_retry_ms:
            transport = _LinkTransport(self, server, peer)
            engine.sync_round(peer, transport)
            status = engine.peer_status(peer)
        next_at = max(self.now + self.sync_interval_ms, status.next_retry_ms)
        self._push(next_at, "sync", (server, peer))

    def run(self) -> ScenarioResult:
        hard_cap = max(self.trace.horizon_ms, self._last_workload_ms) + HARD_CAP_EXTRA_MS
        pending_ops = len(self.workload)
        while self._heap:
            t, _, kind, data = heapq.heappop(self._heap)
            if t > hard_cap:
                break
            self.now = max(self.now, t)
            if kind == "op":
                self._run_op(data)
                pending_ops -= 1
            elif kind == "sync":
                self._run_sync(*data)
            elif kind == "staleness":
                self.engines[data].staleness_check()
                self._push(self.now + DEFAULT_STALENESS_CHECK_MS, "staleness", data)
            self._note_progress()
            if pending_ops == 0 and self.now >= self._last_workload_ms and self._digests_equal():
                if self.result.convergence_time_ms is None:
                    self.result.convergence_time_ms = self.now
                self.result.converged = True
                break
        self.result.end_time_ms = self.now
        for s in self.servers:
            self.result.final_digests[s] = self.engines[s].digest()
            self.result.final_state_hashes[s] = self.engines[s].state_hash()
        for s, d in self.dispatchers.items():
            d.pump(self.engines[s].snapshot(), self.now)
            self.result.notification_counts[s] = len(d.jobs)
        return self.result


def run_scenario(
    topology: dict,
    trace: OutageTrace,
    workload: List[dict],
    seed,
    **options,
) -> ScenarioResult:
    return Simulation(topology, trace, workload, seed, **options).run()


def check_convergence(result: ScenarioResult) -> dict:
    """Recompute digests and canonical hashes from the raw logs.

    Independent of engine snapshot caching: every log is refolded from
    scratch. Divergent events are named by (origin, seq).
    """
    sim = result.sim
    if sim is None:
        raise ScenarioError("result has no attached simulation to audit")
    digests = {}
    hashes = {}
    keysets = {}
    for s in sim.servers:
        events = sim.engines[s].all_events()
        vv: Dict[str, int] = {}
        for ev in sorted(events, key=lambda e: (e.origin, e.seq)):
            if ev.seq != vv.get(ev.origin, 0) + 1:
                return {"ok": False, "divergent": [(ev.origin, ev.seq)], "reason": "gap in log"}
            vv[ev.origin] = ev.seq
        digests[s] = vv
        hashes[s] = state_hash(materialize(events))
        keysets[s] = {ev.key for ev in events}
    servers = sim.servers
    all_keys = set().union(*keysets.values()) if keysets else set()
    divergent = sorted(
        key for key in all_keys if any(key not in keysets[s] for s in servers)
    )
    ok = (
        all(digests[s] == digests[servers[0]] for s in servers)
        and all(hashes[s] == hashes[servers[0]] for s in servers)
        and not divergent
    )
    report = {"ok": ok, "digests": digests, "state_hashes": hashes, "divergent": divergent}
    return report


# -- scenario files and generated scenarios -----------------------------------


def load_scenario(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if "topology" not in raw:
        raise ScenarioError(f"{path}: scenario needs a topology section")
    return raw


def run_scenario_file(path: str, seed=None) -> ScenarioResult:
    raw = load_scenario(path)
    seed = seed if seed is not None else raw.get("seed", 0)
    topology = raw["topology"]
    links = [tuple(l) for l in topology.get("links", [])]
    if "trace" in raw:
        trace = OutageTrace.from_dict(raw["trace"])
    else:
        gen = raw.get("trace_params", {})
        trace = generate_outage_trace(
            seed,
            links,
            horizon_ms=int(gen.get("horizon_ms", WEEK_MS)),
            short_rate=float(gen.get("short_rate", 1.0)),
            long_rate=float(gen.get("long_rate", LONG_PER_WEEK)),
        )
    bootstrap = raw.get("bootstrap", [])
    if isinstance(bootstrap, dict) and "fixture_dir" in bootstrap:
        bootstrap = [
            {"op": "raw", "kind": kind, "payload": payload}
            for kind, payload in fixture_events(load_fixture(bootstrap["fixture_dir"]))
        ]
    options = {}
    for key in ("sync_interval_ms", "staleness_threshold_ms"):
        if key in raw:
            options[key] = int(raw[key])
    return run_scenario(
        topology,
        trace,
        raw.get("workload", []),
        seed,
        bootstrap=bootstrap,
        stub_channel=raw.get("stub_channel"),
        homed=raw.get("homed"),
        notify_servers=raw.get("notify_servers"),
        **options,
    )


def random_scenario(seed, max_servers: int = 5, max_events: int = 200) -> dict:
    """Randomized but fully deterministic sweep scenario description."""
    rng = random.Random(f"{seed}/scenario")
    n_servers = rng.randint(2, max_servers)
    servers = [f"s{i}" for i in range(1, n_servers + 1)]
    links = [[servers[i - 1], servers[i]] for i in range(1, n_servers)]
    for i in range(n_servers):
        for j in range(i + 2, n_servers):
            if rng.random() < 0.3:
                links.append([servers[i], servers[j]])
    horizon_ms = int(rng.uniform(6 * HOUR_MS, 18 * HOUR_MS))

    hospital = {"id": "h1", "name": "Hub Hospital", "tier": "teaching", "region": "Central"}
    doctors = []
    for i, s in enumerate(servers, 1):
        doctors.append(
            {
                "id": f"d{i}",
                "display_name": f"Doctor {i}",
                "hospital": "h1",
                "specialties": ["internal_medicine"] if i % 2 else ["pediatrics"],
                "country": "GH",
                "contact": {"email": f"d{i}@example.test", "phone": f"+23320000000{i}"},
            }
        )
    group = {"id": "g1", "name": "Case Forum", "kind": "specialty", "affiliation": "pediatrics"}
    bootstrap = [{"op": "create_hospital", "hospital": hospital}]
    bootstrap += [{"op": "create_user", "doctor": d} for d in doctors]
    bootstrap.append({"op": "create_group", "group": group})
    bootstrap += [
        {"op": "membership", "doctor": d["id"], "group": "g1", "member": True} for d in doctors
    ]

    n_events = rng.randint(20, max_events)
    times = sorted(int(rng.uniform(1 * MIN_MS, horizon_ms * 0.8)) for _ in range(n_events))
    workload = []
    threads_by_server: Dict[str, List[str]] = {s: [] for s in servers}
    thread_counter = 0
    for at in times:
        idx = rng.randrange(n_servers)
        server = servers[idx]
        author = f"d{idx + 1}"
        local_threads = threads_by_server[server]
        choice = rng.random()
        if choice < 0.25 or not local_threads:
            thread_counter += 1
            tid = f"t{thread_counter}"
            threads_by_server[server].append(tid)
            kind = rng.choice(["consultation", "discussion", "referral"])
            thread = {"id": tid, "kind": kind, "creator": author}
            if kind != "discussion":
                thread["case_form"] = {
                    "age_band": "30-39",
                    "sex": "female",
                    "clinical_history": f"case narrative {tid}",
                    "specialization_requested": rng.choice(["pediatrics", "internal_medicine"]),
                }
            workload.append({"at": at, "server": server, "op": "create_thread", "thread": thread})
        elif choice < 0.6:
            tid = rng.choice(local_threads)
            workload.append(
                {
                    "at": at,
                    "server": server,
                    "op": "message",
                    "message": {
                        "id": f"m{len(workload) + 1}",
                        "thread": tid,
                        "author": author,
                        "body": f"note {len(workload) + 1}",
                    },
                }
            )
        elif choice < 0.8:
            tid = rng.choice(local_threads)
            if rng.random() < 0.5:
                target = {"doctor": f"d{rng.randrange(n_servers) + 1}"}
            else:
                target = {"group": "g1"}
            workload.append(
                {
                    "at": at,
                    "server": server,
                    "op": "assign",
                    "thread": tid,
                    "target": target,
                    "assigned_by": author,
                }
            )
        elif choice < 0.9:
            other = f"d{rng.randrange(n_servers) + 1}"
            if other != author:
                workload.append(
                    {"at": at, "server": server, "op": "edge", "from": author, "to": other}
                )
        else:
            workload.append(
                {
                    "at": at,
                    "server": server,
                    "op": "membership",
                    "doctor": author,
                    "group": "g1",
                    "member": rng.random() < 0.7,
                }
            )
    return {
        "topology": {"servers": servers, "links": links},
        "trace_params": {"horizon_ms": horizon_ms},
        "bootstrap": bootstrap,
        "workload": workload,
        "homed": {servers[0]: ["d1"]},
        "seed": seed,
    }


def run_random_scenario(seed, max_servers: int = 5, max_events: int = 200) -> ScenarioResult:
    desc = random_scenario(seed, max_servers=max_servers, max_events=max_events)
    links = [tuple(l) for l in desc["topology"]["links"]]
    trace = generate_outage_trace(
        seed, links, horizon_ms=desc["trace_params"]["horizon_ms"]
    )
    return run_scenario(
        desc["topology"],
        trace,
        desc["workload"],
        seed,
        bootstrap=desc["bootstrap"],
        homed=desc["homed"],
        sync_interval_ms=10 * MIN_MS,
    )

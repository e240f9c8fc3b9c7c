"""Command line entry points: serve, admin bootstrap, reports, simulation."""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from pathlib import Path
from typing import Optional

from .config import ConfigError, ServerConfig, load_config
from .fixtures import load_fixture, pilot_fixture_dir
from .report import category_report, export_colleague_graph, to_dot, to_json


def _build_engine(cfg: ServerConfig):
    from .engine import ReplicationEngine
    from .eventlog import JsonlLog, MemoryLog

    if cfg.data_dir:
        data_dir = Path(cfg.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        log = JsonlLog(data_dir / f"events-{cfg.server_id}.jsonl")
    else:
        log = MemoryLog()
    return ReplicationEngine(
        cfg.server_id, log=log, staleness_threshold_ms=cfg.staleness_threshold_ms
    )


def cmd_serve(args) -> int:
    import uvicorn

    from .api import HttpSyncTransport, create_app
    from .eventlog import write_state_snapshot
    from .notify import Dispatcher, MemoryTransport
    from .state import canonical_state

    cfg = load_config(args.config)
    engine = _build_engine(cfg)
    transports = {}
    for name in ("email", "sms"):
        if name in cfg.transports:
            # real SMSC/SMTP gateways are out of scope; the memory transport
            # keeps the queue observable in the field
            transports[name] = MemoryTransport()
    dispatcher = None
    if transports and cfg.homed_users:
        dispatcher = Dispatcher(
            homed=cfg.homed_users,
            transports=transports,
            now_ms=lambda: int(time.time() * 1000),
            staleness_threshold_hours=cfg.staleness_threshold_hours,
        )
        engine.add_apply_hook(dispatcher.on_events)
        engine.add_staleness_hook(dispatcher.on_staleness)
    lock = threading.RLock()
    app = create_app(cfg, engine, dispatcher=dispatcher, lock=lock)
    stop = threading.Event()

    peer_transports = {
        p.id: HttpSyncTransport(p.url, peer_secret=p.secret) for p in cfg.peers
    }
    for peer_id in peer_transports:
        engine.register_peer(peer_id)

    def sync_loop():
        while not stop.wait(cfg.sync_interval_s):
            now_ms = int(time.time() * 1000)
            for peer_id, transport in peer_transports.items():
                if now_ms >= engine.peer_status(peer_id).next_retry_ms:
                    # the lock is taken inside the round, around local state
                    # only; holding it across the HTTP exchange would deadlock
                    # two servers whose rounds fire at the same moment
                    engine.sync_round(peer_id, transport, lock=lock)
            with lock:
                engine.staleness_check()
                if dispatcher is not None:
                    dispatcher.pump(engine.snapshot())
                if cfg.data_dir:
                    write_state_snapshot(
                        Path(cfg.data_dir) / f"state-{cfg.server_id}.json",
                        canonical_state(engine.snapshot()),
                    )

    if peer_transports:
        threading.Thread(target=sync_loop, name="medsync-sync", daemon=True).start()
    ssl_kwargs = {}
    if cfg.tls is not None:
        ssl_kwargs = {"ssl_certfile": cfg.tls.cert, "ssl_keyfile": cfg.tls.key}
    try:
        uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info", **ssl_kwargs)
    finally:
        stop.set()
    return 0


def cmd_admin_create_user(args) -> int:
    from .api import make_credential

    cfg = load_config(args.config)
    engine = _build_engine(cfg)
    doctor = {
        "id": args.id,
        "display_name": args.name,
        "hospital": args.hospital,
        "specialties": args.specialty or [],
        "country": args.country,
        "seniority": args.seniority,
        "contact": {"email": args.email, "phone": args.phone},
        "is_admin": bool(args.admin),
    }
    payload = {"doctor": doctor, "credential": make_credential(args.secret)}
    from .engine import CommitValidationError

    try:
        ev = engine.commit("UserCreated", payload)
    except CommitValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"created {args.id} (event {ev.origin}:{ev.seq})")
    return 0


def cmd_admin_create_hospital(args) -> int:
    cfg = load_config(args.config)
    engine = _build_engine(cfg)
    hospital = {
        "id": args.id,
        "name": args.name,
        "tier": args.tier,
        "region": args.region,
        "referral_parent": args.referral_parent,
        "departments": args.department or [],
    }
    from .engine import CommitValidationError

    try:
        ev = engine.commit("HospitalCreated", {"hospital": hospital})
    except CommitValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"created {args.id} (event {ev.origin}:{ev.seq})")
    return 0


def cmd_report(args) -> int:
    directory = args.fixture or pilot_fixture_dir()
    fx = load_fixture(directory)
    if args.graph:
        doc = export_colleague_graph(fx.doctors, fx.edges, fx.hospitals)
        output = to_dot(doc) if args.graph == "dot" else to_json(doc)
    else:
        report = category_report(fx.threads, fx.doctors, fx.groups, fx.hospitals)
        if args.format == "json":
            output = json.dumps(report.to_dict(), indent=2, sort_keys=True)
        else:
            output = report.render_table()
    if args.out:
        Path(args.out).write_text(output if output.endswith("\n") else output + "\n", encoding="utf-8")
    else:
        print(output)
    return 0


def cmd_sim_run(args) -> int:
    from .sim import check_convergence, run_scenario_file

    result = run_scenario_file(args.scenario, seed=args.seed)
    audit = check_convergence(result)
    doc = result.to_dict()
    doc["audit_ok"] = audit["ok"]
    doc["divergent"] = audit["divergent"]
    output = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(output + "\n", encoding="utf-8")
    else:
        print(output)
    return 0 if audit["ok"] else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medsync")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the API server with background sync")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    admin = sub.add_parser("admin", help="offline administrative actions")
    admin_sub = admin.add_subparsers(dest="admin_command", required=True)

    p = admin_sub.add_parser("create-user", help="append a UserCreated event to the local log")
    p.add_argument("--config", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--hospital", required=True)
    p.add_argument("--secret", required=True)
    p.add_argument("--specialty", action="append")
    p.add_argument("--country", default="GH")
    p.add_argument("--seniority", default="senior")
    p.add_argument("--email")
    p.add_argument("--phone")
    p.add_argument("--admin", action="store_true")
    p.set_defaults(func=cmd_admin_create_user)

    p = admin_sub.add_parser("create-hospital", help="append a HospitalCreated event")
    p.add_argument("--config", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--tier", required=True)
    p.add_argument("--region", required=True)
    p.add_argument("--referral-parent", dest="referral_parent")
    p.add_argument("--department", action="append")
    p.set_defaults(func=cmd_admin_create_hospital)

    p = sub.add_parser("report", help="thread categorization and network export")
    p.add_argument("--fixture", help="fixture directory (defaults to the bundled pilot)")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--graph", choices=("dot", "json"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    simp = sub.add_parser("sim", help="deterministic network simulation")
    sim_sub = simp.add_subparsers(dest="sim_command", required=True)
    p = sim_sub.add_parser("run", help="run a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sim_run)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

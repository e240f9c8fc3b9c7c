"""Server configuration: TOML or JSON file, path overridable by MEDSYNC_CONFIG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import tomli

ENV_VAR = "MEDSYNC_CONFIG"
ROLES = ("local", "global")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class TlsConfig:
    cert: str
    key: str


@dataclass(frozen=True)
class PeerConfig:
    id: str
    url: str
    secret: Optional[str] = None


@dataclass
class ServerConfig:
    server_id: str
    role: str = "local"
    peers: List[PeerConfig] = field(default_factory=list)
    homed_users: List[str] = field(default_factory=list)
    staleness_threshold_hours: float = 24.0
    tls: Optional[TlsConfig] = None
    transports: Dict[str, dict] = field(default_factory=dict)
    test_mode: bool = False
    data_dir: Optional[str] = None
    host: str = "127.0.0.1"
    port: int = 8547
    peer_secret: Optional[str] = None  # inbound /sync auth; peers carry their own
    sync_interval_s: int = 300

    @property
    def staleness_threshold_ms(self) -> int:
        return int(self.staleness_threshold_hours * 3600 * 1000)


def _parse(raw: dict, source: str) -> ServerConfig:
    try:
        server_id = raw["server_id"]
    except KeyError:
        raise ConfigError(f"{source}: server_id is required")
    role = raw.get("role", "local")
    if role not in ROLES:
        raise ConfigError(f"{source}: role must be one of {ROLES}, got {role!r}")
    peers = []
    for p in raw.get("peers", []):
        try:
            peers.append(PeerConfig(id=p["id"], url=p["url"], secret=p.get("secret")))
        except (KeyError, TypeError):
            raise ConfigError(f"{source}: each peer needs id and url")
    tls = None
    if "tls" in raw:
        t = raw["tls"]
        try:
            tls = TlsConfig(cert=t["cert"], key=t["key"])
        except (KeyError, TypeError):
            raise ConfigError(f"{source}: tls section needs cert and key")
    threshold = float(raw.get("staleness_threshold_hours", 24.0))
    if threshold <= 0:
        raise ConfigError(f"{source}: staleness_threshold_hours must be positive")
    cfg = ServerConfig(
        server_id=server_id,
        role=role,
        peers=peers,
        homed_users=list(raw.get("homed_users", [])),
        staleness_threshold_hours=threshold,
        tls=tls,
        transports=dict(raw.get("transports", {})),
        test_mode=bool(raw.get("test_mode", False)),
        data_dir=raw.get("data_dir"),
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8547)),
        peer_secret=raw.get("peer_secret"),
        sync_interval_s=int(raw.get("sync_interval_s", 300)),
    )
    if not cfg.test_mode and cfg.tls is None:
        # Patient case data crosses hospital boundaries: cleartext sync is
        # only permitted when explicitly flagged as a test deployment.
        raise ConfigError(f"{source}: tls{{cert,key}} is required unless test_mode = true")
    return cfg


def load_config(path: Optional[str] = None) -> ServerConfig:
    env = os.environ.get(ENV_VAR)
    if env:
        path = env
    if path is None:
        raise ConfigError(f"no config path given and {ENV_VAR} is unset")
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if path.endswith(".json"):
        try:
            raw = json.loads(blob)
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}")
    else:
        try:
            raw = tomli.loads(blob.decode("utf-8"))
        except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return _parse(raw, path)

"""CLI surface: offline admin provisioning, report output modes, scenario runs.

`serve` is exercised through its building blocks elsewhere (create_app and
HttpSyncTransport); starting uvicorn is not worth a test.
"""

import json

import pytest

from medsync import cli
from medsync.api import verify_credential
from medsync.engine import ReplicationEngine
from medsync.eventlog import JsonlLog
from medsync.fixtures import pilot_fixture_dir
from medsync.report import from_json
from medsync.sim import HOUR_MS, MIN_MS


@pytest.fixture()
def config_path(tmp_path, monkeypatch):
    monkeypatch.delenv("MEDSYNC_CONFIG", raising=False)
    cfg = tmp_path / "medsync.toml"
    cfg.write_text(
        f'server_id = "accra"\ndata_dir = "{tmp_path / "data"}"\ntest_mode = true\n',
        encoding="utf-8",
    )
    return cfg


def reload_snapshot(tmp_path):
    log = JsonlLog(tmp_path / "data" / "events-accra.jsonl")
    return ReplicationEngine("accra", log=log).snapshot()


def test_admin_provisioning_persists_across_invocations(config_path, tmp_path, capsys):
    assert cli.main(
        [
            "admin", "create-hospital", "--config", str(config_path),
            "--id", "h1", "--name", "Hub Teaching", "--tier", "teaching",
            "--region", "Greater Accra", "--department", "urology",
        ]
    ) == 0
    # a separate invocation reopens the same log and sees the hospital
    assert cli.main(
        [
            "admin", "create-user", "--config", str(config_path),
            "--id", "ama", "--name", "Dr Ama Mensah", "--hospital", "h1",
            "--secret", "ward-7-rounds", "--specialty", "urology",
            "--email", "ama@example.test", "--admin",
        ]
    ) == 0
    out = capsys.readouterr().out
    assert "created h1 (event accra:1)" in out
    assert "created ama (event accra:2)" in out
    snap = reload_snapshot(tmp_path)
    assert snap.doctors["ama"].is_admin is True
    assert set(snap.doctors["ama"].specialties) == {"urology"}
    # the stored credential accepts the chosen secret
    assert verify_credential(snap.credentials["ama"], "ward-7-rounds")
    assert not verify_credential(snap.credentials["ama"], "wrong")


def test_admin_rejections_exit_nonzero_and_leave_the_log_alone(config_path, tmp_path, capsys):
    args = [
        "admin", "create-user", "--config", str(config_path),
        "--id", "ama", "--name", "Dr Ama Mensah", "--hospital", "h-missing",
        "--secret", "s",
    ]
    assert cli.main(args) == 1
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "data" / "events-accra.jsonl").read_text().strip()


def test_report_graph_json_mode(capsys):
    assert cli.main(["report", "--graph", "json", "--fixture", str(pilot_fixture_dir())]) == 0
    doc = from_json(capsys.readouterr().out)
    assert len(doc.nodes) == 29
    assert len(doc.edges) == 43


def test_sim_run_writes_an_audited_result(tmp_path, capsys):
    scenario = {
        "topology": {"servers": ["a", "b"], "links": [["a", "b"]]},
        "trace_params": {"horizon_ms": 2 * HOUR_MS, "short_rate": 0.0, "long_rate": 0.0},
        "bootstrap": [
            {"op": "create_hospital", "hospital": {"id": "h1", "name": "Hub", "tier": "teaching", "region": "r"}},
            {"op": "create_user", "doctor": {"id": "d1", "display_name": "One", "hospital": "h1"}},
        ],
        "workload": [
            {
                "at": 5 * MIN_MS,
                "server": "a",
                "op": "create_thread",
                "thread": {
                    "id": "t1",
                    "kind": "consultation",
                    "creator": "d1",
                    "case_form": {"clinical_history": "x", "specialization_requested": None},
                },
            }
        ],
        "seed": 9,
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario), encoding="utf-8")
    out = tmp_path / "result.json"
    assert cli.main(["sim", "run", "--scenario", str(path), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["audit_ok"] is True
    assert doc["converged"] is True
    assert doc["divergent"] == []
    assert set(doc["final_digests"]) == {"a", "b"}


def test_unreadable_config_reports_a_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("MEDSYNC_CONFIG", raising=False)
    missing = tmp_path / "nope.toml"
    code = cli.main(["admin", "create-hospital", "--config", str(missing),
                     "--id", "h", "--name", "n", "--tier", "district", "--region", "r"])
    assert code == 1
    assert "config error:" in capsys.readouterr().err

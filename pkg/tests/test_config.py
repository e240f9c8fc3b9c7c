import pytest

from medsync.config import ENV_VAR, ConfigError, load_config


GOOD_TOML = """
server_id = "cc1"
role = "local"
homed_users = ["d-30", "d-31"]
staleness_threshold_hours = 12.5
test_mode = true
port = 9000

[[peers]]
id = "gh1"
url = "https://accra.example:8547"
secret = "s3cret"

[transports.email]
smtp_host = "localhost"
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_toml_config_parses(tmp_path):
    cfg = load_config(write(tmp_path, "server.toml", GOOD_TOML))
    assert cfg.server_id == "cc1"
    assert cfg.role == "local"
    assert cfg.homed_users == ["d-30", "d-31"]
    assert cfg.staleness_threshold_hours == 12.5
    assert cfg.staleness_threshold_ms == 45_000_000
    assert cfg.port == 9000
    assert len(cfg.peers) == 1
    assert cfg.peers[0].id == "gh1" and cfg.peers[0].secret == "s3cret"
    assert cfg.transports["email"]["smtp_host"] == "localhost"
    assert cfg.tls is None and cfg.test_mode


def test_json_config_parses(tmp_path):
    path = write(tmp_path, "server.json", """
    {"server_id": "gh1", "role": "global", "test_mode": true,
     "peers": [{"id": "cc1", "url": "https://cape.example"}]}
    """)
    cfg = load_config(path)
    assert cfg.role == "global"
    assert cfg.peers[0].secret is None


def test_env_var_overrides_argument(tmp_path, monkeypatch):
    a = write(tmp_path, "a.toml", GOOD_TOML)
    b = write(tmp_path, "b.toml", GOOD_TOML.replace('"cc1"', '"kf1"'))
    monkeypatch.setenv(ENV_VAR, b)
    assert load_config(a).server_id == "kf1"
    monkeypatch.delenv(ENV_VAR)
    assert load_config(a).server_id == "cc1"


def test_no_path_and_no_env_fails(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)
    with pytest.raises(ConfigError):
        load_config()


def test_missing_server_id_rejected(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, "x.toml", "test_mode = true"))
    assert "server_id" in str(err.value)


def test_unknown_role_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "x.toml",
                          'server_id = "a"\nrole = "regional"\ntest_mode = true'))


def test_peer_without_url_rejected(tmp_path):
    text = 'server_id = "a"\ntest_mode = true\n[[peers]]\nid = "b"\n'
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, "x.toml", text))
    assert "peer" in str(err.value)


def test_tls_required_outside_test_mode(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, "x.toml", 'server_id = "a"'))
    assert "tls" in str(err.value)
    cfg = load_config(write(tmp_path, "ok.toml",
                            'server_id = "a"\n[tls]\ncert = "c.pem"\nkey = "k.pem"\n'))
    assert cfg.tls.cert == "c.pem"


def test_tls_section_needs_both_halves(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "x.toml", 'server_id = "a"\n[tls]\ncert = "c.pem"\n'))


def test_nonpositive_staleness_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "x.toml",
                          'server_id = "a"\ntest_mode = true\nstaleness_threshold_hours = 0\n'))


def test_invalid_toml_and_json_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "x.toml", "server_id = [unclosed"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "x.json", "{not json"))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.toml"))

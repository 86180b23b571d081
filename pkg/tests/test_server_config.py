"""Server configuration: key=value files, env var, and flag overrides."""

from __future__ import annotations

import pytest

from ei.server import ServerConfig, build_config, parse_config_file


def test_defaults():
    config = ServerConfig()
    assert config.host == "127.0.0.1"
    assert config.port == 8080
    assert config.timeout_s == 60
    assert config.max_output_bytes == 10 * 1024 * 1024
    assert config.record_ttl_s == 24 * 3600
    assert config.cors_origins == ["*"]


def test_parse_config_file(tmp_path):
    path = tmp_path / "server.cfg"
    path.write_text(
        """
# gateway settings
host=0.0.0.0
port=9000
config_dir=/etc/ei/conf
state_root=/var/lib/ei   # trailing comment
timeout_s=30
max_output_bytes=1048576
record_ttl_s=3600
cors_origins=https://a.example, https://b.example
session_secret=hunter2
"""
    )
    config = parse_config_file(path)
    assert config.host == "0.0.0.0"
    assert config.port == 9000
    assert config.config_dir == "/etc/ei/conf"
    assert config.state_root == "/var/lib/ei"
    assert config.timeout_s == 30
    assert config.max_output_bytes == 1048576
    assert config.record_ttl_s == 3600
    assert config.cors_origins == ["https://a.example", "https://b.example"]
    assert config.session_secret == "hunter2"


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / "server.cfg"
    path.write_text("hsot=typo\n")
    with pytest.raises(ValueError, match="hsot"):
        parse_config_file(path)


def test_line_without_equals_is_rejected(tmp_path):
    path = tmp_path / "server.cfg"
    path.write_text("just a line\n")
    with pytest.raises(ValueError):
        parse_config_file(path)


def test_env_var_points_at_config(tmp_path, monkeypatch):
    path = tmp_path / "server.cfg"
    path.write_text("port=7001\nconfig_dir=confs\n")
    monkeypatch.setenv("EI_CONFIG", str(path))
    config = build_config([])
    assert config.port == 7001
    assert config.config_dir == "confs"


def test_flags_override_config_file(tmp_path, monkeypatch):
    path = tmp_path / "server.cfg"
    path.write_text("port=7001\nhost=10.0.0.1\n")
    monkeypatch.setenv("EI_CONFIG", str(path))
    config = build_config(["--port", "7002", "--cors-origins", "https://x.example"])
    assert config.port == 7002
    assert config.host == "10.0.0.1"  # file value survives where no flag given
    assert config.cors_origins == ["https://x.example"]


def test_explicit_config_flag_beats_env(tmp_path, monkeypatch):
    env_cfg = tmp_path / "env.cfg"
    env_cfg.write_text("port=1111\n")
    flag_cfg = tmp_path / "flag.cfg"
    flag_cfg.write_text("port=2222\n")
    monkeypatch.setenv("EI_CONFIG", str(env_cfg))
    config = build_config(["--config", str(flag_cfg)])
    assert config.port == 2222

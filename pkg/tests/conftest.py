"""Shared fixtures: fixture tools, engines, and live gateway servers."""

from __future__ import annotations

import os
import stat
import threading
from pathlib import Path

import pytest

from ei.engine import ExecutionEngine
from ei.gateway import GatewayApp, SessionSigner
from ei.registry import AppSpec, ParamSection, ParameterSpec, Registry
from ei.server import EiHTTPServer, ServerConfig, make_server

FIXTURES_DIR = Path(__file__).parent / "fixtures"
GOLDENS_DIR = Path(__file__).parent / "goldens"


def pytest_sessionstart(session):
    # Fixture tools are invoked as programs; make sure they are executable.
    for script in FIXTURES_DIR.glob("*.py"):
        script.chmod(script.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {outcome}", flush=True)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def goldens_dir() -> Path:
    return GOLDENS_DIR


def fixture_tool(name: str) -> str:
    return str(FIXTURES_DIR / name)


def make_app(
    app_id: str = "tool",
    template: str | None = None,
    params: tuple[ParameterSpec, ...] = (),
    prefix: str = "-",
    check: bool = True,
    visible: bool = True,
    timeout_s: float = 10.0,
    max_output_bytes: int = 1 << 20,
    title: str | None = None,
) -> AppSpec:
    """Programmatic AppSpec for tests that do not exercise the XML parser."""
    return AppSpec(
        id=app_id,
        title=title or app_id,
        visible=visible,
        cmdline_template=template or f"{fixture_tool('echo_argv.py')} _ei_parameters",
        param_section=ParamSection(prefix=prefix, check=check, params=params),
        timeout_s=timeout_s,
        max_output_bytes=max_output_bytes,
    )


def make_registry(*apps: AppSpec, example_sets=None) -> Registry:
    return Registry(
        apps={app.id: app for app in apps},
        example_sets=dict(example_sets or {}),
    )


@pytest.fixture
def engine(tmp_path: Path) -> ExecutionEngine:
    return ExecutionEngine(tmp_path / "state")


@pytest.fixture
def gateway(tmp_path: Path):
    """Factory: gateway(app1, app2, ...) -> GatewayApp over a fresh engine."""

    def build(*apps: AppSpec, example_sets=None) -> GatewayApp:
        return GatewayApp(
            make_registry(*apps, example_sets=example_sets),
            ExecutionEngine(tmp_path / "state"),
            SessionSigner(),
        )

    return build


@pytest.fixture
def live_server(tmp_path: Path):
    """Factory that boots a real HTTP gateway on an ephemeral port.

    Yields base URLs; all servers shut down at teardown.
    """
    servers: list[EiHTTPServer] = []
    threads: list[threading.Thread] = []

    def start(
        config_xml: dict[str, str] | None = None,
        web_root: str | None = None,
        cors_origins: list[str] | None = None,
    ) -> str:
        # The booted server object stays reachable via start.servers[-1].
        config_dir = tmp_path / f"conf{len(servers)}"
        config_dir.mkdir()
        for name, text in (config_xml or {}).items():
            (config_dir / name).write_text(text)
        config = ServerConfig(
            host="127.0.0.1",
            port=0,
            config_dir=str(config_dir),
            state_root=str(tmp_path / f"state{len(servers)}"),
            web_root=web_root,
            cors_origins=cors_origins or ["*"],
        )
        server = make_server(config)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        threads.append(thread)
        host, port = server.server_address[:2]
        return f"http://{host}:{port}"

    start.servers = servers
    yield start

    for server in servers:
        server.shutdown()
        server.server_close()
    for thread in threads:
        thread.join(timeout=5)

"""HTTP binding for the gateway: one JSON POST endpoint plus download GETs.

Routes:

* ``POST /ei/server`` -- the JSON command endpoint.  Always answers 200
  with a status envelope (transport-level 404/405 aside), so clients
  dispatch on ``status`` rather than HTTP codes.
* ``GET /ei/server/download/{execid}/{filename}`` -- raw file bytes with
  real HTTP codes, so download links work straight from a browser.
* ``GET /`` and friends -- the bundled web client, when a web root is
  configured.

Server settings come from a key=value config file (``EI_CONFIG`` or
``--config``), overridden by command-line flags; see docs/protocol.md.
"""

from __future__ import annotations

import argparse
import json
import logging
import mimetypes
import os
import sys
import threading
from dataclasses import dataclass, field, fields, replace
from http import HTTPStatus
from http.cookies import SimpleCookie
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import unquote, urlsplit

from .engine import ExecutionEngine
from .gateway import SESSION_COOKIE, GatewayApp, SessionSigner
from .registry import DEFAULT_MAX_OUTPUT_BYTES, DEFAULT_TIMEOUT_S, load_registry

log = logging.getLogger("ei.server")

COMMAND_PATH = "/ei/server"
DOWNLOAD_PREFIX = "/ei/server/download/"

_ERROR_HTTP_STATUS = {
    "bad-request": HTTPStatus.BAD_REQUEST,
    "not-found": HTTPStatus.NOT_FOUND,
    "gone": HTTPStatus.GONE,
}


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    config_dir: str = "conf"
    state_root: str = "state"
    web_root: str | None = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_output_bytes: int = DEFAULT_MAX_OUTPUT_BYTES
    record_ttl_s: float = 24 * 3600
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    session_secret: str | None = None
    session_max_age_s: float = 7 * 86400


def parse_config_file(path: str | Path) -> ServerConfig:
    """Read a key=value config file ('#' starts a comment)."""
    config = ServerConfig()
    known = {f.name: f for f in fields(ServerConfig)}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in known:
            raise ValueError(f"{path}:{lineno}: not a recognized 'key=value' setting: {raw.strip()!r}")
        if key == "cors_origins":
            config.cors_origins = [origin.strip() for origin in value.split(",") if origin.strip()]
        elif key == "port":
            config.port = int(value)
        elif key == "max_output_bytes":
            config.max_output_bytes = int(value)
        elif key in ("timeout_s", "record_ttl_s", "session_max_age_s"):
            setattr(config, key, float(value))
        else:
            setattr(config, key, value)
    return config


class EiHTTPServer(ThreadingHTTPServer):
    """Threaded so long-running executions do not block stream fetches."""

    daemon_threads = True

    def __init__(self, config: ServerConfig, gateway: GatewayApp):
        self.config = config
        self.gateway = gateway
        super().__init__((config.host, config.port), GatewayRequestHandler)


class GatewayRequestHandler(BaseHTTPRequestHandler):
    server: EiHTTPServer
    protocol_version = "HTTP/1.1"

    # -- routing --------------------------------------------------------------

    def do_POST(self) -> None:
        if urlsplit(self.path).path != COMMAND_PATH:
            self._send_json({"status": "error", "code": "not-found", "message": "unknown endpoint"},
                            status=HTTPStatus.NOT_FOUND)
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"null")
        except (ValueError, json.JSONDecodeError):
            self._send_json(
                {"status": "error", "code": "bad-request", "message": "body is not valid JSON"}
            )
            return
        session_id, minted = self.server.gateway.sessions.issue(self._cookie_token())
        response = self.server.gateway.handle(body, session_id=session_id)
        self._send_json(response.body(), set_session=session_id if minted else None)

    def do_GET(self) -> None:
        path = urlsplit(self.path).path
        if path.startswith(DOWNLOAD_PREFIX):
            self._serve_download(path)
            return
        self._serve_static(path)

    def do_OPTIONS(self) -> None:
        self.send_response(HTTPStatus.NO_CONTENT)
        self._cors_headers()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Max-Age", "600")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- handlers -------------------------------------------------------------

    def _serve_download(self, path: str) -> None:
        parts = [unquote(part) for part in path[len(DOWNLOAD_PREFIX):].split("/")]
        if len(parts) != 2 or not all(parts):
            self._send_json(
                {"status": "error", "code": "bad-request", "message": "expected download/{execid}/{filename}"},
                status=HTTPStatus.BAD_REQUEST,
            )
            return
        execid, filename = parts
        content, media_type, error = self.server.gateway.download(execid, filename)
        if error is not None:
            code, message = error
            self._send_json(
                {"status": "error", "code": code, "message": message},
                status=_ERROR_HTTP_STATUS.get(code, HTTPStatus.INTERNAL_SERVER_ERROR),
            )
            return
        self.send_response(HTTPStatus.OK)
        self._cors_headers()
        self.send_header("Content-Type", media_type)
        self.send_header("Content-Disposition", f'attachment; filename="{filename}"')
        self.send_header("Content-Length", str(len(content)))
        self.end_headers()
        self.wfile.write(content)

    def _serve_static(self, path: str) -> None:
        web_root = self.server.config.web_root
        if web_root is None:
            if path == "/":
                banner = (
                    "EI gateway is running.\n"
                    f"POST {COMMAND_PATH} with a JSON command, "
                    f"or GET {DOWNLOAD_PREFIX}{{execid}}/{{filename}}.\n"
                ).encode()
                self.send_response(HTTPStatus.OK)
                self._cors_headers()
                self.send_header("Content-Type", "text/plain; charset=utf-8")
                self.send_header("Content-Length", str(len(banner)))
                self.end_headers()
                self.wfile.write(banner)
                return
            self._send_json(
                {"status": "error", "code": "not-found", "message": "unknown endpoint"},
                status=HTTPStatus.NOT_FOUND,
            )
            return
        root = Path(web_root).resolve()
        relative = unquote(path).lstrip("/") or "index.html"
        target = (root / relative).resolve()
        if root != target and root not in target.parents:
            self._send_json(
                {"status": "error", "code": "bad-request", "message": "path escapes the web root"},
                status=HTTPStatus.BAD_REQUEST,
            )
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json(
                {"status": "error", "code": "not-found", "message": "no such file"},
                status=HTTPStatus.NOT_FOUND,
            )
            return
        content = target.read_bytes()
        media_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(HTTPStatus.OK)
        self._cors_headers()
        self.send_header("Content-Type", media_type)
        self.send_header("Content-Length", str(len(content)))
        self.end_headers()
        self.wfile.write(content)

    # -- plumbing -------------------------------------------------------------

    def _cookie_token(self) -> str | None:
        cookie = SimpleCookie(self.headers.get("Cookie", ""))
        morsel = cookie.get(SESSION_COOKIE)
        return morsel.value if morsel else None

    def _cors_headers(self) -> None:
        origins = self.server.config.cors_origins
        origin = self.headers.get("Origin")
        if "*" in origins:
            self.send_header("Access-Control-Allow-Origin", "*")
        elif origin and origin in origins:
            self.send_header("Access-Control-Allow-Origin", origin)
            self.send_header("Access-Control-Allow-Credentials", "true")
            self.send_header("Vary", "Origin")

    def _send_json(
        self,
        payload: dict,
        status: HTTPStatus = HTTPStatus.OK,
        set_session: str | None = None,
    ) -> None:
        body = json.dumps(payload).encode()
        self.send_response(status)
        self._cors_headers()
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        if set_session is not None:
            max_age = int(self.server.config.session_max_age_s)
            self.send_header(
                "Set-Cookie",
                f"{SESSION_COOKIE}={set_session}; Path=/; Max-Age={max_age}; HttpOnly; SameSite=Lax",
            )
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, format: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), format % args)


# ---------------------------------------------------------------------------
# Assembly and entry point
# ---------------------------------------------------------------------------


def make_server(config: ServerConfig) -> EiHTTPServer:
    """Load the registry and bind the listening socket (not serving yet)."""
    registry = load_registry(
        config.config_dir,
        default_timeout_s=config.timeout_s,
        default_max_output_bytes=config.max_output_bytes,
    )
    for diagnostic in registry.load_diagnostics:
        (log.error if diagnostic.fatal else log.warning)("%s", diagnostic)
    engine = ExecutionEngine(config.state_root)
    signer = SessionSigner(
        secret=config.session_secret.encode() if config.session_secret else None,
        max_age_s=config.session_max_age_s,
    )
    gateway = GatewayApp(registry, engine, signer)
    return EiHTTPServer(config, gateway)


def start_reaper(server: EiHTTPServer, stop: threading.Event) -> threading.Thread:
    ttl = server.config.record_ttl_s

    def loop() -> None:
        while not stop.wait(min(ttl / 4, 300.0)):
            count = server.gateway.engine.reap_expired(ttl)
            if count:
                log.info("reaped %d expired executions", count)

    thread = threading.Thread(target=loop, name="ei-reaper", daemon=True)
    thread.start()
    return thread


def build_config(argv: list[str] | None = None) -> ServerConfig:
    parser = argparse.ArgumentParser(
        prog="ei-server",
        description="Expose locally installed command-line tools to remote clients.",
    )
    parser.add_argument("--config", help="key=value config file (default: $EI_CONFIG when set)")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--config-dir", help="directory of app/example XML configs")
    parser.add_argument("--state-root", help="directory for execution state")
    parser.add_argument("--web-root", help="directory of the bundled web client")
    parser.add_argument("--cors-origins", help="comma-separated allowed origins, or *")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    config_path = args.config or os.environ.get("EI_CONFIG")
    config = parse_config_file(config_path) if config_path else ServerConfig()
    overrides = {}
    for name in ("host", "port", "config_dir", "state_root", "web_root"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.cors_origins is not None:
        overrides["cors_origins"] = [o.strip() for o in args.cors_origins.split(",") if o.strip()]
    config = replace(config, **overrides)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return config


def main(argv: list[str] | None = None) -> int:
    config = build_config(argv)
    try:
        server = make_server(config)
    except OSError as exc:
        print(f"ei-server: {exc}", file=sys.stderr)
        return 1
    stop = threading.Event()
    start_reaper(server, stop)
    host, port = server.server_address[:2]
    print(f"ei-server listening on http://{host}:{port}{COMMAND_PATH}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""The JSON command protocol: dispatch, output classification, sessions.

One envelope in, one envelope out.  Requests are JSON objects with a
``command`` field ("execute", "apps", "examples", "fetchoutput",
"download"); responses carry ``status: ok`` plus command-specific fields,
or ``status: error`` with a machine code and a human message.  The exact
shapes are documented in ``docs/protocol.md``.

This module is transport-free; :mod:`ei.server` binds it to HTTP.
"""

from __future__ import annotations

import base64
import binascii
import hmac
import hashlib
import logging
import secrets
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Any

from . import cmdline, engine as engine_mod, registry as registry_mod
from .cmdline import ExecutionRequest, ExpansionContext
from .engine import ExecutionEngine
from .registry import Registry

log = logging.getLogger("ei.gateway")

SESSION_COOKIE = "ei_session"


def classify_output(stdout: bytes) -> str:
    """"eiout" when stdout parses as XML rooted at <eiout>, else "plain-text".

    Fails open: a tool that emits broken XML degrades to raw text display
    instead of erroring.
    """
    text = stdout.decode("utf-8", errors="replace").strip()
    if not text.startswith("<"):
        return "plain-text"
    try:
        root = ET.fromstring(text)
    except ET.ParseError:
        return "plain-text"
    return "eiout" if root.tag == "eiout" else "plain-text"


class SessionSigner:
    """Mints and verifies the signed opaque tokens behind the session cookie."""

    def __init__(self, secret: bytes | None = None, max_age_s: float = 7 * 86400):
        self._secret = secret if secret else secrets.token_bytes(32)
        self.max_age_s = max_age_s

    def mint(self) -> str:
        payload = f"{int(time.time())}.{secrets.token_urlsafe(18)}"
        return f"{payload}.{self._sign(payload)}"

    def verify(self, token: str) -> bool:
        payload, _, signature = token.rpartition(".")
        if not payload or not hmac.compare_digest(self._sign(payload), signature):
            return False
        try:
            issued_at = int(payload.split(".", 1)[0])
        except ValueError:
            return False
        return 0 <= time.time() - issued_at <= self.max_age_s

    def issue(self, presented: str | None) -> tuple[str, bool]:
        """Return (token, minted): the presented token when still valid,
        otherwise a fresh one the caller must set as a cookie."""
        if presented and self.verify(presented):
            return presented, False
        return self.mint(), True

    def _sign(self, payload: str) -> str:
        return hmac.new(self._secret, payload.encode(), hashlib.sha256).hexdigest()[:32]


@dataclass(frozen=True)
class GatewayResponse:
    status: str  # "ok" or "error"
    payload: dict[str, Any] = field(default_factory=dict)
    content_kind: str | None = None  # eiout | plain-text | binary

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def body(self) -> dict[str, Any]:
        """The wire envelope."""
        return {"status": self.status, **self.payload}


def _ok(payload: dict[str, Any], content_kind: str | None = None) -> GatewayResponse:
    return GatewayResponse("ok", payload, content_kind)


def _error(code: str, message: str, **extra: Any) -> GatewayResponse:
    return GatewayResponse("error", {"code": code, "message": message, **extra})


class BadRequest(ValueError):
    pass


class GatewayApp:
    """Dispatches decoded JSON commands against a registry and an engine.

    Handlers are stateless over an immutable registry snapshot; reloads
    swap the reference atomically, so in-flight requests finish against
    the registry they started with.
    """

    def __init__(
        self,
        registry: Registry,
        engine: ExecutionEngine,
        signer: SessionSigner | None = None,
    ):
        self._registry = registry
        self._registry_lock = threading.Lock()
        self.engine = engine
        self.sessions = signer or SessionSigner()

    @property
    def registry(self) -> Registry:
        with self._registry_lock:
            return self._registry

    def reload_registry(self, new_registry: Registry) -> None:
        with self._registry_lock:
            self._registry = new_registry

    # -- dispatch -------------------------------------------------------------

    def handle(self, request: Any, session_id: str) -> GatewayResponse:
        """Run one command. Total: any input yields a structured envelope."""
        try:
            if not isinstance(request, dict):
                return _error("bad-request", "request body must be a JSON object")
            command = request.get("command")
            if not isinstance(command, str):
                return _error("bad-request", "request has no 'command' string")
            if command == "execute":
                return self._handle_execute(request, session_id)
            if command == "apps":
                return self._handle_apps(request)
            if command == "examples":
                return self._handle_examples()
            if command == "fetchoutput":
                return self._handle_fetchoutput(request)
            if command == "download":
                return self._handle_download(request)
            return _error("unknown-command", f"unknown command {command!r}")
        except BadRequest as exc:
            return _error("bad-request", str(exc))
        except Exception:
            log.exception("unhandled error in gateway dispatch")
            return _error("internal", "internal server error")

    # -- commands -------------------------------------------------------------

    def _handle_apps(self, request: dict[str, Any]) -> GatewayResponse:
        reg = self.registry
        app_id = request.get("app_id")
        if app_id is not None:
            app = registry_mod.get_app(reg, _expect_str(app_id, "app_id"))
            if app is None:
                return self._no_such_app(reg, app_id)
            summaries = [registry_mod.AppSummary(app.id, app.title, app.param_section.params)]
        else:
            summaries = registry_mod.list_apps(reg, include_hidden=bool(request.get("include_hidden")))
        return _ok({"apps": [_summary_json(s) for s in summaries]})

    def _handle_examples(self) -> GatewayResponse:
        sets = [
            {"id": exset.id, "root": _example_node_json(exset.root)}
            for exset in self.registry.example_sets.values()
        ]
        sets.sort(key=lambda item: item["id"])
        return _ok({"example_sets": sets})

    def _handle_execute(self, request: dict[str, Any], session_id: str) -> GatewayResponse:
        reg = self.registry
        app_id = request.get("app_id")
        if not isinstance(app_id, str) or not app_id:
            return _error("bad-request", "execute needs an 'app_id'")
        app = registry_mod.get_app(reg, app_id)
        if app is None:
            return self._no_such_app(reg, app_id)

        try:
            req = _decode_execution_request(request, app_id, session_id)
        except BadRequest as exc:
            return _error("bad-request", str(exc))

        violations = cmdline.validate_parameters(app.param_section, req.parameters)
        if violations:
            return _error(
                "invalid-params",
                "; ".join(str(v) for v in violations),
                violations=[{"param": v.param, "reason": v.reason} for v in violations],
            )

        try:
            record = self.engine.create_execution(app, req)
        except cmdline.FileMaterializeError as exc:
            return _error("bad-request", str(exc))

        ctx = ExpansionContext(
            serialized_params=tuple(cmdline.serialize_parameters(app.param_section, req.parameters)),
            file_paths=record.file_paths,
            outline_tokens=req.outline_entities,
            execid=record.execid,
            stream_dir=str(record.stream_dir),
            download_dir=str(record.download_dir),
            session_id=session_id,
            client_id=req.client_id,
        )
        argv = cmdline.expand_template(app.cmdline_template, ctx)

        try:
            result = self.engine.run(record, argv)
        except engine_mod.ToolUnavailableError:
            log.warning("tool for app %r unavailable (argv[0]=%r)", app_id, argv[0])
            return _error("tool-unavailable", f"the tool behind app {app_id!r} is not available")

        kind = classify_output(result.stdout)
        return _ok(
            {
                "execid": record.execid,
                "content_kind": kind,
                "output": result.stdout.decode("utf-8", errors="replace"),
                "exit_code": result.exit_code,
                "timed_out": result.timed_out,
                "truncated": result.truncated,
                "duration_s": round(result.duration, 3),
            },
            content_kind=kind,
        )

    def _handle_fetchoutput(self, request: dict[str, Any]) -> GatewayResponse:
        execid = _expect_str(request.get("execid"), "execid")
        cursor = request.get("cursor", 0)
        if not isinstance(cursor, int) or isinstance(cursor, bool) or cursor < 0:
            raise BadRequest("'cursor' must be a nonnegative integer")
        try:
            chunk_set = self.engine.fetch_stream(execid, cursor)
        except engine_mod.ExecutionGoneError:
            return _error("gone", f"execution {execid} has been reclaimed")
        except engine_mod.UnknownExecutionError:
            return _error("not-found", f"no execution {execid}")
        return _ok(
            {
                "chunks": [
                    {"index": index, "data": data.decode("utf-8", errors="replace")}
                    for index, data in chunk_set.chunks
                ],
                "next_cursor": chunk_set.next_cursor,
                "live": chunk_set.live,
            }
        )

    def _handle_download(self, request: dict[str, Any]) -> GatewayResponse:
        execid = _expect_str(request.get("execid"), "execid")
        filename = _expect_str(request.get("filename"), "filename")
        content, media_type, code = self.download(execid, filename)
        if code is not None:
            return _error(code[0], code[1])
        return _ok(
            {
                "filename": filename,
                "media_type": media_type,
                "content_b64": base64.b64encode(content).decode("ascii"),
            },
            content_kind="binary",
        )

    def download(
        self, execid: str, filename: str
    ) -> tuple[bytes, str, tuple[str, str] | None]:
        """Shared download resolution; returns (bytes, media_type, error).

        The error slot carries (code, message) so the HTTP layer can map it
        to real status codes for browser GETs.
        """
        try:
            content, media_type = self.engine.resolve_download(execid, filename)
            return content, media_type, None
        except engine_mod.BadDownloadNameError:
            return b"", "", ("bad-request", f"not a bare file name: {filename!r}")
        except engine_mod.ExecutionGoneError:
            return b"", "", ("gone", f"execution {execid} has been reclaimed")
        except engine_mod.UnknownExecutionError:
            return b"", "", ("not-found", f"no execution {execid}")
        except engine_mod.DownloadNotFoundError:
            return b"", "", ("not-found", f"no file {filename!r} for execution {execid}")

    def _no_such_app(self, reg: Registry, app_id: str) -> GatewayResponse:
        available = ", ".join(s.id for s in registry_mod.list_apps(reg)) or "none"
        return _error("no-such-app", f"no such app {app_id!r} (available: {available})")


# ---------------------------------------------------------------------------
# Request decoding
# ---------------------------------------------------------------------------


def _decode_execution_request(
    request: dict[str, Any], app_id: str, session_id: str
) -> ExecutionRequest:
    parameters = _decode_parameters(request.get("parameters", {}))
    files = _decode_files(request.get("files", []))
    outline = _decode_string_list(request.get("outline", []), "outline")
    client_id = request.get("client_id", "unknown")
    if not isinstance(client_id, str) or not client_id:
        raise BadRequest("'client_id' must be a nonempty string")
    _reject_nul(client_id, "client_id")
    reason = cmdline.validate_virtual_paths([path for path, _ in files])
    if reason is not None:
        raise BadRequest(reason)
    return ExecutionRequest(
        app_id=app_id,
        parameters=parameters,
        files=tuple(files),
        outline_entities=tuple(outline),
        client_id=client_id,
        session_token=session_id,
    )


def _decode_parameters(raw: Any) -> dict[str, list[str]]:
    if not isinstance(raw, dict):
        raise BadRequest("'parameters' must be an object of name -> values")
    decoded: dict[str, list[str]] = {}
    for name, values in raw.items():
        if not isinstance(name, str) or not name:
            raise BadRequest("parameter names must be nonempty strings")
        _reject_nul(name, "parameter name")
        if not isinstance(values, list):
            values = [values]
        decoded[name] = [_coerce_value(v, name) for v in values]
    return decoded


def _coerce_value(value: Any, name: str) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, str):
        _reject_nul(value, f"value of parameter {name!r}")
        return value
    raise BadRequest(f"value of parameter {name!r} must be a string or number")


def _decode_files(raw: Any) -> list[tuple[str, bytes]]:
    if not isinstance(raw, list):
        raise BadRequest("'files' must be a list")
    files: list[tuple[str, bytes]] = []
    for item in raw:
        if not isinstance(item, dict) or "path" not in item:
            raise BadRequest("each file needs a 'path' and a 'content'")
        path = _expect_str(item["path"], "file path")
        content = item.get("content", "")
        if not isinstance(content, str):
            raise BadRequest(f"content of {path!r} must be a string")
        encoding = item.get("encoding", "text")
        if encoding == "base64":
            try:
                data = base64.b64decode(content, validate=True)
            except (binascii.Error, ValueError):
                raise BadRequest(f"content of {path!r} is not valid base64")
        elif encoding == "text":
            data = content.encode("utf-8")
        else:
            raise BadRequest(f"unknown file encoding {encoding!r}")
        files.append((path, data))
    return files


def _decode_string_list(raw: Any, what: str) -> list[str]:
    if not isinstance(raw, list):
        raise BadRequest(f"'{what}' must be a list of strings")
    out = []
    for value in raw:
        if not isinstance(value, str):
            raise BadRequest(f"'{what}' must be a list of strings")
        _reject_nul(value, what)
        out.append(value)
    return out


def _expect_str(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value:
        raise BadRequest(f"'{what}' must be a nonempty string")
    _reject_nul(value, what)
    return value


def _reject_nul(value: str, what: str) -> None:
    if "\x00" in value:
        raise BadRequest(f"{what} contains a NUL byte")


# ---------------------------------------------------------------------------
# JSON shapes
# ---------------------------------------------------------------------------


def _summary_json(summary: registry_mod.AppSummary) -> dict[str, Any]:
    return {
        "id": summary.id,
        "title": summary.title,
        "parameters": [
            {
                "name": p.name,
                "kind": p.kind,
                "options": list(p.options),
                "defaults": list(p.defaults),
            }
            for p in summary.params
        ],
    }


def _example_node_json(node: registry_mod.ExampleNode) -> dict[str, Any]:
    if isinstance(node, registry_mod.Folder):
        return {
            "type": "folder",
            "name": node.name,
            "children": [_example_node_json(child) for child in node.children],
        }
    if isinstance(node, registry_mod.FileRef):
        return {"type": "file", "name": node.name, "url": node.url}
    return {
        "type": "github",
        "owner": node.owner,
        "repo": node.repo,
        "branch": node.branch,
        "path": node.path,
    }

"""``ei`` -- the terminal client: run remote tools, follow streams, fetch files.

Exit codes: 0 success, 1 the tool itself failed (nonzero exit or
timeout), 2 the gateway refused the request, 3 transport failure.
"""

from __future__ import annotations

import argparse
import base64
import json
import os
import sys
import time
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path
from typing import Any

from . import eiout

DEFAULT_SERVER = "http://127.0.0.1:8080"

EXIT_OK = 0
EXIT_TOOL_FAILURE = 1
EXIT_GATEWAY_ERROR = 2
EXIT_TRANSPORT_ERROR = 3


class TransportError(Exception):
    pass


def _server_url(flag_value: str | None) -> str:
    return (flag_value or os.environ.get("EI_SERVER") or DEFAULT_SERVER).rstrip("/")


def _post(server_url: str, payload: dict[str, Any], timeout: float = 300.0) -> dict[str, Any]:
    request = urllib.request.Request(
        server_url + "/ei/server",
        data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return json.loads(response.read())
    except urllib.error.HTTPError as exc:
        raise TransportError(f"server answered HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
        raise TransportError(f"cannot reach {server_url}: {exc}") from exc


def _fail(message: str, code: int) -> int:
    print(f"ei: {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def run_remote(
    server_url: str,
    app_id: str,
    files: list[str],
    params: list[str],
    outline: list[str],
    verbose: bool = False,
) -> int:
    """Submit one execution and print its output (rendered when eiout)."""
    parameters: dict[str, list[str]] = {}
    for item in params:
        name, sep, value = item.partition("=")
        if not name:
            return _fail(f"bad --param {item!r}, expected name=value", EXIT_GATEWAY_ERROR)
        values = parameters.setdefault(name, [])
        if sep:
            values.append(value)

    file_payload = []
    seen_names: set[str] = set()
    for path_str in files:
        path = Path(path_str)
        try:
            data = path.read_bytes()
        except OSError as exc:
            return _fail(f"cannot read {path}: {exc}", EXIT_GATEWAY_ERROR)
        if path.name in seen_names:
            return _fail(f"two files named {path.name!r}; rename one", EXIT_GATEWAY_ERROR)
        seen_names.add(path.name)
        try:
            file_payload.append({"path": path.name, "content": data.decode("utf-8"), "encoding": "text"})
        except UnicodeDecodeError:
            file_payload.append(
                {"path": path.name, "content": base64.b64encode(data).decode("ascii"), "encoding": "base64"}
            )

    payload = {
        "command": "execute",
        "app_id": app_id,
        "parameters": parameters,
        "files": file_payload,
        "outline": outline,
        "client_id": "cli",
    }
    try:
        response = _post(server_url, payload)
    except TransportError as exc:
        return _fail(str(exc), EXIT_TRANSPORT_ERROR)
    if response.get("status") != "ok":
        return _fail(response.get("message", "gateway error"), EXIT_GATEWAY_ERROR)

    if verbose:
        print(
            f"execid: {response.get('execid')} exit: {response.get('exit_code')}",
            file=sys.stderr,
        )
    output = response.get("output", "")
    if response.get("content_kind") == "eiout":
        try:
            print(eiout.render_text(eiout.parse(output)))
        except eiout.EiOutParseError:
            print(output, end="" if output.endswith("\n") else "\n")
    elif output:
        print(output, end="" if output.endswith("\n") else "\n")

    if response.get("timed_out"):
        return _fail("tool timed out", EXIT_TOOL_FAILURE)
    if response.get("exit_code") != 0:
        return _fail(f"tool exited with {response.get('exit_code')}", EXIT_TOOL_FAILURE)
    return EXIT_OK


def follow_stream(server_url: str, execid: str, interval_s: float = 60.0) -> int:
    """Poll an execution's stream, printing each chunk exactly once, until
    the writer is done and no chunks remain."""
    cursor = 0
    while True:
        try:
            response = _post(server_url, {"command": "fetchoutput", "execid": execid, "cursor": cursor})
        except TransportError as exc:
            return _fail(str(exc), EXIT_TRANSPORT_ERROR)
        if response.get("status") != "ok":
            return _fail(response.get("message", "gateway error"), EXIT_GATEWAY_ERROR)
        chunks = response.get("chunks", [])
        for chunk in chunks:
            sys.stdout.write(chunk.get("data", ""))
        sys.stdout.flush()
        cursor = int(response.get("next_cursor", cursor))
        if not response.get("live") and not chunks:
            return EXIT_OK
        time.sleep(interval_s)


def fetch_download(server_url: str, execid: str, filename: str, out_path: str | None) -> int:
    """Save one file produced by an execution; bytes arrive verbatim."""
    if "/" in filename or "\\" in filename or filename in (".", ".."):
        return _fail(f"not a bare file name: {filename!r}", EXIT_GATEWAY_ERROR)
    url = f"{server_url}/ei/server/download/{execid}/{urllib.parse.quote(filename)}"
    try:
        with urllib.request.urlopen(url, timeout=300.0) as response:
            data = response.read()
    except urllib.error.HTTPError as exc:
        if exc.code in (400, 404, 410):
            detail = "not found" if exc.code == 404 else ("gone" if exc.code == 410 else "rejected")
            return _fail(f"download {filename!r} for {execid}: {detail}", EXIT_GATEWAY_ERROR)
        return _fail(f"server answered HTTP {exc.code}", EXIT_TRANSPORT_ERROR)
    except (urllib.error.URLError, OSError) as exc:
        return _fail(f"cannot reach {server_url}: {exc}", EXIT_TRANSPORT_ERROR)
    target = Path(out_path or filename)
    target.write_bytes(data)
    print(f"saved {target} ({len(data)} bytes)")
    return EXIT_OK


def list_apps(server_url: str) -> int:
    try:
        response = _post(server_url, {"command": "apps"})
    except TransportError as exc:
        return _fail(str(exc), EXIT_TRANSPORT_ERROR)
    if response.get("status") != "ok":
        return _fail(response.get("message", "gateway error"), EXIT_GATEWAY_ERROR)
    apps = response.get("apps", [])
    if not apps:
        print("(no apps installed)")
        return EXIT_OK
    for app in apps:
        print(f"{app['id']} - {app.get('title', app['id'])}")
        for param in app.get("parameters", []):
            line = f"  --param {param['name']}  ({param['kind']}"
            if param.get("options"):
                line += ": " + ", ".join(param["options"])
            line += ")"
            if param.get("defaults"):
                line += f" [default: {', '.join(param['defaults'])}]"
            print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ei",
        description="Run remote command-line tools through an EI gateway.",
        epilog="The default server comes from --server, then $EI_SERVER, then "
        f"{DEFAULT_SERVER}.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="execute an app and print its output")
    run.add_argument("app_id")
    run.add_argument("--server")
    run.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                     help="repeatable; NAME alone turns a flag on")
    run.add_argument("--file", action="append", default=[], metavar="PATH",
                     help="repeatable; sent under its base name")
    run.add_argument("--outline", action="append", default=[], metavar="ENTITY",
                     help="repeatable outline entity")
    run.add_argument("-v", "--verbose", action="store_true",
                     help="print execid and exit code to stderr")

    follow = sub.add_parser("follow", help="print an execution's stream until it ends")
    follow.add_argument("execid")
    follow.add_argument("--server")
    follow.add_argument("--interval", type=float, default=60.0, metavar="SECONDS",
                        help="poll interval (default 60)")

    get = sub.add_parser("get", help="download a file produced by an execution")
    get.add_argument("execid")
    get.add_argument("filename")
    get.add_argument("-o", "--output", metavar="PATH")
    get.add_argument("--server")

    apps = sub.add_parser("apps", help="list the apps the server offers")
    apps.add_argument("--server")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    server_url = _server_url(args.server)
    if args.subcommand == "run":
        return run_remote(server_url, args.app_id, args.file, args.param, args.outline, args.verbose)
    if args.subcommand == "follow":
        return follow_stream(server_url, args.execid, args.interval)
    if args.subcommand == "get":
        return fetch_download(server_url, args.execid, args.filename, args.output)
    return list_apps(server_url)


if __name__ == "__main__":
    raise SystemExit(main())

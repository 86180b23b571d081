"""Create executions, run tools under limits, and serve streams and downloads.

Every execution gets an unguessable identifier and three private
directories: a working directory (request files, cwd of the tool), a
stream directory the tool may write output chunks into, and a download
directory for files clients fetch later.  The directories outlive the
process so stream and download requests keyed by the execution id keep
working until the record is reaped.

Tool-author contract for streams (see docs/app-config.md): chunks are
files named ``NNNNNN.out`` (zero-padded decimal, counting from 0) written
to a temporary name and renamed into place; a background writer keeps a
``running`` sentinel file in the stream directory and removes it when done.
"""

from __future__ import annotations

import logging
import mimetypes
import os
import re
import secrets
import shutil
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .cmdline import ExecutionRequest, materialize_files
from .registry import AppSpec

log = logging.getLogger("ei.engine")

RUNNING_SENTINEL = "running"
_CHUNK_RE = re.compile(r"^(\d{6})\.out$")
_EXECID_RE = re.compile(r"^EI[A-Za-z0-9]+$")
_STDERR_LOG_BYTES = 64 * 1024

TERMINAL_STATES = ("finished", "timed-out", "failed")

#: Wall-clock slack allowed beyond the configured timeout.
KILL_GRACE_S = 1.0


class EngineError(Exception):
    pass


class UnknownExecutionError(EngineError):
    """No record for this execution id."""


class ExecutionGoneError(EngineError):
    """The record existed but has been reaped."""


class ToolUnavailableError(EngineError):
    """The configured program cannot be spawned."""


class BadDownloadNameError(EngineError):
    """Download file names must be bare names, no separators or dot-dots."""


class DownloadNotFoundError(EngineError):
    """No such file in this execution's download directory."""


def new_execid() -> str:
    """Mint an execution identifier: 'EI' plus 64 bits of randomness."""
    return "EI" + secrets.token_hex(8)


def chunk_filename(index: int) -> str:
    return f"{index:06d}.out"


def publish_chunk(stream_dir: str | Path, index: int, data: bytes) -> None:
    """Atomically publish one stream chunk (write to a temp name, rename)."""
    stream_dir = Path(stream_dir)
    tmp = stream_dir / f".{chunk_filename(index)}.tmp"
    tmp.write_bytes(data)
    os.rename(tmp, stream_dir / chunk_filename(index))


@dataclass
class ExecutionRecord:
    execid: str
    app_id: str
    workdir: Path
    stream_dir: Path
    download_dir: Path
    timeout_s: float
    max_output_bytes: int
    created_at: float = field(default_factory=time.time)
    state: str = "created"
    file_paths: tuple[str, ...] = ()
    stderr_tail: bytes = b""

    @property
    def base_dir(self) -> Path:
        return self.workdir.parent


@dataclass(frozen=True)
class ExecutionResult:
    exit_code: int | None
    stdout: bytes
    truncated: bool
    timed_out: bool
    duration: float


@dataclass(frozen=True)
class ChunkSet:
    chunks: tuple[tuple[int, bytes], ...]
    next_cursor: int
    live: bool


class ExecutionEngine:
    """Owns the execution records and their on-disk state.

    The record map is guarded by a lock; directory contents are only ever
    written by the execution that owns them (chunks via rename), so stream
    and download reads are safe concurrently with a running tool.
    """

    def __init__(self, state_root: str | Path):
        self.state_root = Path(state_root).resolve()
        self.executions_dir = self.state_root / "executions"
        self.executions_dir.mkdir(parents=True, exist_ok=True)
        # Deny directory listing to the tools that run beneath it; with ids
        # unguessable, that leaves no route to a sibling execution's files.
        # (Advisory for root, which bypasses permission bits.)
        os.chmod(self.executions_dir, 0o311)
        self._records: dict[str, ExecutionRecord] = {}
        self._reaped: set[str] = set()
        self._lock = threading.Lock()

    # -- record lifecycle ---------------------------------------------------

    def create_execution(self, app: AppSpec, request: ExecutionRequest) -> ExecutionRecord:
        """Mint an execution id, create its directories, and materialize files."""
        while True:
            execid = new_execid()
            with self._lock:
                if execid not in self._records and execid not in self._reaped:
                    # Reserve the id before touching the disk.
                    record = ExecutionRecord(
                        execid=execid,
                        app_id=app.id,
                        workdir=self.executions_dir / execid / "work",
                        stream_dir=self.executions_dir / execid / "stream",
                        download_dir=self.executions_dir / execid / "download",
                        timeout_s=app.timeout_s,
                        max_output_bytes=app.max_output_bytes,
                    )
                    self._records[execid] = record
                    break
        try:
            for directory in (record.workdir, record.stream_dir, record.download_dir):
                directory.mkdir(parents=True)
            record.file_paths = tuple(materialize_files(request.files, record.workdir))
        except Exception:
            with self._lock:
                self._records.pop(record.execid, None)
            shutil.rmtree(record.base_dir, ignore_errors=True)
            raise
        return record

    def get(self, execid: str) -> ExecutionRecord:
        if not _EXECID_RE.match(execid or ""):
            raise UnknownExecutionError(execid)
        with self._lock:
            if execid in self._reaped:
                raise ExecutionGoneError(execid)
            record = self._records.get(execid)
        if record is None:
            raise UnknownExecutionError(execid)
        return record

    # -- running ------------------------------------------------------------

    def run(self, record: ExecutionRecord, argv: list[str]) -> ExecutionResult:
        """Spawn argv and capture stdout up to the record's output limit.

        The process starts in a fresh session with a scrubbed environment
        and the working directory as cwd; on timeout the whole process
        group is killed.  stdout beyond the limit is drained and discarded
        so a runaway tool can neither block on a full pipe nor exhaust
        memory; stderr is kept server-side for logs only.
        """
        if record.state != "created":
            raise EngineError(f"execution {record.execid} already ran (state={record.state})")

        env = {"HOME": str(record.workdir)}
        for name in ("PATH", "LANG", "LC_ALL"):
            if name in os.environ:
                env[name] = os.environ[name]
        env.setdefault("PATH", os.defpath)

        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                argv,
                cwd=record.workdir,
                env=env,
                stdin=subprocess.DEVNULL,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                bufsize=0,
                start_new_session=True,
            )
        except (FileNotFoundError, PermissionError, OSError) as exc:
            record.state = "failed"
            raise ToolUnavailableError(f"cannot spawn {argv[0]!r}: {exc}") from exc
        record.state = "running"

        limit = record.max_output_bytes
        stdout_buf = bytearray()
        stderr_buf = bytearray()
        truncated = False
        buf_lock = threading.Lock()

        def read_stdout() -> None:
            nonlocal truncated
            while True:
                chunk = proc.stdout.read(65536)
                if not chunk:
                    return
                with buf_lock:
                    room = limit - len(stdout_buf)
                    if room > 0:
                        stdout_buf.extend(chunk[:room])
                    if len(chunk) > room:
                        truncated = True  # keep draining, discard the rest

        def read_stderr() -> None:
            while True:
                chunk = proc.stderr.read(65536)
                if not chunk:
                    return
                if len(stderr_buf) < _STDERR_LOG_BYTES:
                    stderr_buf.extend(chunk[: _STDERR_LOG_BYTES - len(stderr_buf)])

        readers = [
            threading.Thread(target=read_stdout, daemon=True),
            threading.Thread(target=read_stderr, daemon=True),
        ]
        for reader in readers:
            reader.start()

        timed_out = False
        try:
            proc.wait(timeout=record.timeout_s)
        except subprocess.TimeoutExpired:
            timed_out = True
            self._kill_group(proc)
            proc.wait()
        for reader in readers:
            # A tool may have handed its stdout to a detached background
            # process; do not wait on it forever.
            reader.join(timeout=2.0)
        duration = time.monotonic() - start

        record.state = "timed-out" if timed_out else "finished"
        record.stderr_tail = bytes(stderr_buf)
        if record.stderr_tail:
            log.debug("execution %s stderr: %s", record.execid, record.stderr_tail[:1024])
        with buf_lock:
            stdout = bytes(stdout_buf)
        return ExecutionResult(
            exit_code=None if timed_out else proc.returncode,
            stdout=stdout,
            truncated=truncated,
            timed_out=timed_out,
            duration=duration,
        )

    @staticmethod
    def _kill_group(proc: subprocess.Popen) -> None:
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            try:
                proc.kill()
            except ProcessLookupError:
                pass

    # -- streams and downloads ----------------------------------------------

    def fetch_stream(self, execid: str, cursor: int) -> ChunkSet:
        """All published chunks with index >= cursor, in index order.

        ``live`` reports whether more output may still appear: either the
        foreground process is running, or a background writer maintains
        the ``running`` sentinel.
        """
        record = self.get(execid)
        if cursor < 0:
            cursor = 0
        indices: list[int] = []
        try:
            for name in os.listdir(record.stream_dir):
                m = _CHUNK_RE.match(name)
                if m:
                    indices.append(int(m.group(1)))
        except FileNotFoundError:
            raise ExecutionGoneError(execid) from None
        indices.sort()
        chunks = tuple(
            (index, (record.stream_dir / chunk_filename(index)).read_bytes())
            for index in indices
            if index >= cursor
        )
        next_cursor = chunks[-1][0] + 1 if chunks else cursor
        live = record.state in ("created", "running") or (
            record.stream_dir / RUNNING_SENTINEL
        ).exists()
        return ChunkSet(chunks=chunks, next_cursor=next_cursor, live=live)

    def resolve_download(self, execid: str, filename: str) -> tuple[bytes, str]:
        """The named file from the execution's download directory, plus a media type."""
        record = self.get(execid)
        if (
            not filename
            or filename in (".", "..")
            or "/" in filename
            or "\\" in filename
            or any(ord(ch) < 0x20 for ch in filename)
        ):
            raise BadDownloadNameError(f"not a bare file name: {filename!r}")
        path = record.download_dir / filename
        if not path.is_file():
            raise DownloadNotFoundError(f"no file {filename!r} for execution {execid}")
        media_type = mimetypes.guess_type(filename)[0] or "application/octet-stream"
        return path.read_bytes(), media_type

    # -- housekeeping ---------------------------------------------------------

    def reap_expired(self, ttl_s: float) -> int:
        """Delete directories of terminal records older than ttl; returns count.

        Running executions are never reaped.  Reaped ids answer stream and
        download requests with "gone" rather than "unknown".
        """
        now = time.time()
        with self._lock:
            expired = [
                record
                for record in self._records.values()
                if record.state in TERMINAL_STATES and now - record.created_at > ttl_s
            ]
            for record in expired:
                del self._records[record.execid]
                self._reaped.add(record.execid)
        for record in expired:
            shutil.rmtree(record.base_dir, ignore_errors=True)
        return len(expired)

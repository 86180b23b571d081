"""Execution records, resource-limited runs, stream fetches, downloads, reaping."""

from __future__ import annotations

import json
import os
import random
import subprocess
import threading
import time

import pytest

from conftest import fixture_tool, make_app
from ei.cmdline import ExecutionRequest
from ei.engine import (
    BadDownloadNameError,
    DownloadNotFoundError,
    EngineError,
    ExecutionGoneError,
    ToolUnavailableError,
    UnknownExecutionError,
    chunk_filename,
    new_execid,
    publish_chunk,
)


def req(**kwargs) -> ExecutionRequest:
    return ExecutionRequest(app_id="tool", **kwargs)


# ---------------------------------------------------------------------------
# Record creation
# ---------------------------------------------------------------------------


def test_fresh_record(engine):
    record = engine.create_execution(make_app(), req())
    assert record.state == "created"
    assert record.execid.startswith("EI")
    for directory in (record.workdir, record.stream_dir, record.download_dir):
        assert directory.is_dir()
        assert list(directory.iterdir()) == []
    assert len({record.workdir, record.stream_dir, record.download_dir}) == 3


def test_distinct_execids(engine):
    a = engine.create_execution(make_app(), req())
    b = engine.create_execution(make_app(), req())
    assert a.execid != b.execid


def test_execid_entropy():
    ids = {new_execid() for _ in range(10_000)}
    assert len(ids) == 10_000
    assert all(len(i) >= 2 + 16 for i in ids)


def test_request_files_land_in_workdir(engine):
    record = engine.create_execution(make_app(), req(files=(("sum.c", b"int x;"),)))
    assert (record.workdir / "sum.c").read_bytes() == b"int x;"
    assert record.file_paths == (str(record.workdir / "sum.c"),)


def test_bad_file_path_cleans_up(engine):
    with pytest.raises(Exception):
        engine.create_execution(make_app(), req(files=(("../up", b""),)))
    assert list(engine.executions_dir.iterdir()) == []


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def test_run_echo(engine):
    record = engine.create_execution(make_app(), req())
    result = engine.run(record, ["/bin/echo", "hi"])
    assert result.stdout == b"hi\n"
    assert result.exit_code == 0
    assert not result.timed_out and not result.truncated
    assert record.state == "finished"


def test_timeout_kills_within_grace(engine):
    record = engine.create_execution(make_app(timeout_s=1.0), req())
    start = time.monotonic()
    result = engine.run(record, ["/bin/sleep", "10"])
    elapsed = time.monotonic() - start
    assert result.timed_out
    assert result.exit_code is None
    assert elapsed < 2.0
    assert record.state == "timed-out"


def test_output_truncated_at_limit(engine):
    limit = 64 * 1024
    record = engine.create_execution(make_app(max_output_bytes=limit), req())
    result = engine.run(record, [fixture_tool("big_output.py"), str(2 * limit)])
    assert result.truncated
    assert len(result.stdout) == limit
    assert result.exit_code == 0


def test_exact_limit_is_not_truncated(engine):
    limit = 8192
    record = engine.create_execution(make_app(max_output_bytes=limit), req())
    result = engine.run(record, [fixture_tool("big_output.py"), str(limit)])
    assert not result.truncated
    assert len(result.stdout) == limit


def test_missing_executable(engine):
    record = engine.create_execution(make_app(), req())
    with pytest.raises(ToolUnavailableError):
        engine.run(record, ["/no/such/tool"])
    assert record.state == "failed"


def test_run_twice_refused(engine):
    record = engine.create_execution(make_app(), req())
    engine.run(record, ["/bin/true"])
    with pytest.raises(EngineError):
        engine.run(record, ["/bin/true"])


def test_cwd_is_workdir_and_env_scrubbed(engine):
    record = engine.create_execution(make_app(), req())
    os.environ["EI_TEST_SECRET"] = "leak"
    try:
        result = engine.run(
            record,
            ["/usr/bin/env", "python3", "-c",
             "import os; print(os.getcwd()); print(os.environ.get('EI_TEST_SECRET')); print(os.environ['HOME'])"],
        )
    finally:
        del os.environ["EI_TEST_SECRET"]
    cwd, secret, home = result.stdout.decode().splitlines()
    assert cwd == str(record.workdir.resolve())
    assert secret == "None"
    assert home == str(record.workdir)


def test_spawn_recorder_sees_only_configured_argv(engine, monkeypatch):
    spawned: list[list[str]] = []
    real_popen = subprocess.Popen

    def recording_popen(argv, *args, **kwargs):
        spawned.append(list(argv))
        return real_popen(argv, *args, **kwargs)

    monkeypatch.setattr("ei.engine.subprocess.Popen", recording_popen)
    record = engine.create_execution(make_app(), req())
    argv = [fixture_tool("echo_argv.py"), "-p", "a; b | c"]
    engine.run(record, argv)
    assert spawned == [argv]


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------


def test_empty_stream(engine):
    record = engine.create_execution(make_app(), req())
    chunk_set = engine.fetch_stream(record.execid, 0)
    assert chunk_set.chunks == ()
    assert chunk_set.next_cursor == 0
    assert chunk_set.live  # never ran, may still start


def test_chunks_in_index_order(engine):
    record = engine.create_execution(make_app(), req())
    for i, data in enumerate((b"a", b"b", b"c")):
        publish_chunk(record.stream_dir, i, data)
    chunk_set = engine.fetch_stream(record.execid, 0)
    assert chunk_set.chunks == ((0, b"a"), (1, b"b"), (2, b"c"))
    assert chunk_set.next_cursor == 3


def test_cursor_tail_is_idempotent(engine):
    record = engine.create_execution(make_app(), req())
    for i in range(3):
        publish_chunk(record.stream_dir, i, b"x")
    chunk_set = engine.fetch_stream(record.execid, 3)
    assert chunk_set.chunks == ()
    assert chunk_set.next_cursor == 3


def test_cursor_resumes_mid_stream(engine):
    record = engine.create_execution(make_app(), req())
    for i in range(4):
        publish_chunk(record.stream_dir, i, str(i).encode())
    chunk_set = engine.fetch_stream(record.execid, 2)
    assert chunk_set.chunks == ((2, b"2"), (3, b"3"))


def test_unknown_execid(engine):
    with pytest.raises(UnknownExecutionError):
        engine.fetch_stream("EIdoesnotexist", 0)


def test_liveness_follows_sentinel(engine):
    record = engine.create_execution(make_app(), req())
    engine.run(record, ["/bin/true"])
    assert not engine.fetch_stream(record.execid, 0).live
    (record.stream_dir / "running").touch()
    assert engine.fetch_stream(record.execid, 0).live
    (record.stream_dir / "running").unlink()
    assert not engine.fetch_stream(record.execid, 0).live


def test_stream_monotonicity_under_interleaving(engine):
    """Concatenation of fetched chunks equals what the writer wrote, exactly once."""
    rng = random.Random(1234)
    record = engine.create_execution(make_app(), req())
    record.state = "finished"  # background-writer mode: liveness via sentinel
    (record.stream_dir / "running").touch()
    written: list[bytes] = []

    def writer():
        for i in range(20):
            data = f"<{i}>".encode() * rng.randint(1, 5)
            written.append(data)
            publish_chunk(record.stream_dir, i, data)
            time.sleep(rng.random() * 0.01)
        (record.stream_dir / "running").unlink()

    thread = threading.Thread(target=writer)
    thread.start()
    fetched: list[bytes] = []
    cursor = 0
    while True:
        chunk_set = engine.fetch_stream(record.execid, cursor)
        fetched.extend(data for _, data in chunk_set.chunks)
        cursor = chunk_set.next_cursor
        if not chunk_set.live and not chunk_set.chunks:
            break
        time.sleep(rng.random() * 0.01)
    thread.join()
    assert b"".join(fetched) == b"".join(written)
    assert len(fetched) == len(written)


def test_chunk_filename_format():
    assert chunk_filename(0) == "000000.out"
    assert chunk_filename(42) == "000042.out"


# ---------------------------------------------------------------------------
# Downloads
# ---------------------------------------------------------------------------


def test_download_round_trip(engine):
    record = engine.create_execution(make_app(), req())
    payload = bytes(range(256)) * 64
    (record.download_dir / "file.zip").write_bytes(payload)
    content, media_type = engine.resolve_download(record.execid, "file.zip")
    assert content == payload
    assert media_type == "application/zip"


def test_download_traversal_rejected(engine):
    record = engine.create_execution(make_app(), req())
    for bad in ("../secret", "a/b", "..", "", "a\\b", "x\x00y"):
        with pytest.raises(BadDownloadNameError):
            engine.resolve_download(record.execid, bad)


def test_download_missing_file(engine):
    record = engine.create_execution(make_app(), req())
    with pytest.raises(DownloadNotFoundError):
        engine.resolve_download(record.execid, "x.zip")


# ---------------------------------------------------------------------------
# Reaping
# ---------------------------------------------------------------------------


def test_reap_nothing(engine):
    assert engine.reap_expired(ttl_s=3600) == 0


def test_reap_finished_record(engine):
    record = engine.create_execution(make_app(), req())
    engine.run(record, ["/bin/true"])
    record.created_at -= 7200
    assert engine.reap_expired(ttl_s=3600) == 1
    assert not record.base_dir.exists()
    with pytest.raises(ExecutionGoneError):
        engine.fetch_stream(record.execid, 0)
    with pytest.raises(ExecutionGoneError):
        engine.resolve_download(record.execid, "f")


def test_running_record_not_reaped(engine):
    record = engine.create_execution(make_app(), req())
    record.state = "running"
    record.created_at -= 7200
    assert engine.reap_expired(ttl_s=3600) == 0
    assert engine.fetch_stream(record.execid, 0).live


# ---------------------------------------------------------------------------
# Isolation
# ---------------------------------------------------------------------------


def test_executions_cannot_be_reached_by_guessing(engine):
    victim = engine.create_execution(make_app(), req(files=(("secret.txt", b"s3cret"),)))
    spy = engine.create_execution(make_app(), req())
    # Plausible guesses: sequential ids, the spy's own id mutated, short ids.
    guesses = [
        "EI0", "EI1", "EI65231",
        victim.execid[:-1] + ("0" if victim.execid[-1] != "0" else "1"),
        spy.execid[:-4] + "0000",
    ]
    result = engine.run(spy, [fixture_tool("spy_neighbors.py"), *guesses])
    report = json.loads(result.stdout)
    assert report["reachable"] == []
    # Listing the shared directory is permission-denied for ordinary users
    # (root bypasses permission bits, so only assert when unprivileged).
    if os.getuid() != 0:
        assert report["listed"] is None
    assert oct(engine.executions_dir.stat().st_mode & 0o777) == "0o311"

"""Protocol session: newline-delimited records on stdin/stdout.

The worker announces `hello {"version": 1}` on startup, verifies the
client's hello, and then serves eval_request records strictly one at a
time: for every request received, exactly one eval_result or eval_error
with the matching request_id is written before the next request is read.
A version mismatch at handshake refuses the session (exit code 2).
"""

from __future__ import annotations

import json
import sys
from typing import IO

from .data import DatasetCache
from .trainer import WorkerFailure, evaluate_request

PROTOCOL_VERSION = 1


def _write(stream: IO[str], kind: str, fields: dict) -> None:
    stream.write(f"{kind} " + json.dumps(fields, sort_keys=True,
                                         separators=(",", ":")) + "\n")
    stream.flush()


def _parse(line: str) -> tuple[str, dict] | None:
    stripped = line.strip()
    if not stripped or " " not in stripped:
        return None
    kind, payload = stripped.split(" ", 1)
    try:
        fields = json.loads(payload)
    except json.JSONDecodeError:
        return None
    if not isinstance(fields, dict):
        return None
    return kind, fields


def serve(stdin: IO[str], stdout: IO[str], data_dir: str | None) -> int:
    _write(stdout, "hello", {"version": PROTOCOL_VERSION})
    first = stdin.readline()
    parsed = _parse(first)
    if parsed is None or parsed[0] != "hello" or parsed[1].get("version") != PROTOCOL_VERSION:
        return 2  # refuse the session

    cache = DatasetCache(data_dir)
    for line in stdin:
        parsed = _parse(line)
        if parsed is None:
            _write(stdout, "eval_error",
                   {"request_id": "", "message": "unparseable record"})
            continue
        kind, fields = parsed
        if kind != "eval_request":
            _write(stdout, "eval_error",
                   {"request_id": str(fields.get("request_id", "")),
                    "message": f"unexpected record kind {kind!r}"})
            continue
        request_id = str(fields.get("request_id", ""))

        def progress(epoch: int, metric: float, _rid=request_id):
            _write(stdout, "progress",
                   {"request_id": _rid, "epoch": epoch, "metric": metric})

        try:
            result = evaluate_request(fields, cache, progress)
        except WorkerFailure as exc:
            _write(stdout, "eval_error", {"request_id": request_id, "message": str(exc)})
            continue
        except Exception as exc:  # noqa: BLE001 - stay alive for the next request
            _write(stdout, "eval_error",
                   {"request_id": request_id, "message": f"internal: {exc!r}"})
            continue
        _write(stdout, "eval_result", result)
    return 0


def main_loop(data_dir: str | None) -> int:
    return serve(sys.stdin, sys.stdout, data_dir)

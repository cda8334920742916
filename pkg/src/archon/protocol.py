"""Worker wire protocol: newline-delimited records over stdin/stdout.

Each record is one line: a kind token, one space, and a JSON object of
fields, UTF-8 encoded and terminated by a single ``\\n``::

    hello {"version": 1}
    eval_request {"request_id": ..., "genotype": ..., "feature_plan": [...],
                  "dataset": ..., "seeds": [...], "epochs_cap": ...}
    progress {"request_id": ..., "epoch": ..., "metric": ...}
    eval_result {"request_id": ..., "metric_mean": ..., "metric_std": ..., "wall_ms": ...}
    eval_error {"request_id": ..., "message": ...}

Handshake: the worker writes its hello line on startup; the client reads
it, verifies the version, and answers with its own hello. A version
mismatch refuses the session. For each eval_request the worker emits zero
or more progress records and then exactly one eval_result or eval_error
with the matching request_id before reading the next request.
"""

from __future__ import annotations

import json

from .errors import ArchonError

PROTOCOL_VERSION = 1

RECORD_FIELDS = {
    "hello": ("version",),
    "eval_request": ("request_id", "genotype", "feature_plan", "dataset",
                     "seeds", "epochs_cap"),
    "progress": ("request_id", "epoch", "metric"),
    "eval_result": ("request_id", "metric_mean", "metric_std", "wall_ms"),
    "eval_error": ("request_id", "message"),
}


class ProtocolViolation(ArchonError):
    """A wire line does not parse as a known record."""

    def __init__(self, message: str, raw: bytes | None = None):
        super().__init__(message)
        self.raw = raw


def format_record(kind: str, fields: dict) -> str:
    """Render one protocol line (without the trailing newline)."""
    if kind not in RECORD_FIELDS:
        raise ProtocolViolation(f"unknown record kind {kind!r}")
    missing = [k for k in RECORD_FIELDS[kind] if k not in fields]
    if missing:
        raise ProtocolViolation(f"{kind} record missing fields {missing}")
    return f"{kind} " + json.dumps(fields, sort_keys=True, separators=(",", ":"))

def parse_record(line: str) -> tuple[str, dict]:
    """Parse one protocol line into (kind, fields)."""
    raw = line.encode("utf-8")
    stripped = line.strip()
    if " " not in stripped:
        raise ProtocolViolation(f"malformed record (no payload): {stripped!r}", raw)
    kind, payload = stripped.split(" ", 1)
    if kind not in RECORD_FIELDS:
        raise ProtocolViolation(f"unknown record kind {kind!r}", raw)
    try:
        fields = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ProtocolViolation(f"{kind} record payload is not JSON: {exc}", raw)
    if not isinstance(fields, dict):
        raise ProtocolViolation(f"{kind} record payload must be an object", raw)
    missing = [k for k in RECORD_FIELDS[kind] if k not in fields]
    if missing:
        raise ProtocolViolation(f"{kind} record missing fields {missing}", raw)
    return kind, fields

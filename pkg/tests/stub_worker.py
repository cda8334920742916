#!/usr/bin/env python3
"""Scriptable stand-in for a training worker, used by protocol tests.

Modes:
  golden     replay responses from a golden JSONL file keyed by request_id
  timeout    handshake, then never answer requests
  badversion announce an unsupported protocol version
  garbage    answer requests with a non-protocol line
  error      answer every request with eval_error (worker stays alive)
"""

from __future__ import annotations

import argparse
import json
import sys
import time


def write(line: str) -> None:
    sys.stdout.write(line + "\n")
    sys.stdout.flush()


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", default="golden")
    parser.add_argument("--script", default=None)
    args = parser.parse_args()

    version = 99 if args.mode == "badversion" else 1
    write(f'hello {{"version": {version}}}')
    hello = sys.stdin.readline()
    if not hello.startswith("hello "):
        return 2

    golden: dict[str, list[str]] = {}
    if args.script:
        with open(args.script, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entry = json.loads(line)
                    golden[entry["request_id"]] = entry["lines"]

    for line in sys.stdin:
        if not line.strip():
            continue
        kind, payload = line.strip().split(" ", 1)
        if kind != "eval_request":
            return 2
        request = json.loads(payload)
        request_id = request["request_id"]
        if args.mode == "timeout":
            time.sleep(600)
            continue
        if args.mode == "garbage":
            write("?? this is not a protocol record")
            continue
        if args.mode == "error":
            write("eval_error " + json.dumps(
                {"request_id": request_id, "message": "synthetic failure"}))
            continue
        if request_id in golden:
            for out_line in golden[request_id]:
                write(out_line)
        else:
            write("eval_error " + json.dumps(
                {"request_id": request_id, "message": f"no golden entry for {request_id}"}))
    return 0


if __name__ == "__main__":
    sys.exit(main())

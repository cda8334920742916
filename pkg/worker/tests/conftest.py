from __future__ import annotations

import json
import queue
import subprocess
import sys
import threading
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[2]
DATASETS = REPO / "datasets"

GCN2 = "v1;ops=gcn,gcn;dim=64;act=relu;drop=0.50;skips=;pool=none;lr=0.01;wd=0.0005;ep=200"


class WireClient:
    """Minimal protocol client over raw subprocess pipes (no engine code)."""

    def __init__(self, data_dir: Path | None = DATASETS, timeout: float = 120.0):
        command = [sys.executable, "-m", "archon_worker"]
        if data_dir is not None:
            command += ["--data-dir", str(data_dir)]
        self.timeout = timeout
        self.proc = subprocess.Popen(command, stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, text=True, bufsize=1)
        self._lines: queue.Queue[str | None] = queue.Queue()
        threading.Thread(target=self._pump, daemon=True).start()

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def read(self) -> tuple[str, dict]:
        line = self._lines.get(timeout=self.timeout)
        assert line is not None, "worker closed its output"
        kind, payload = line.strip().split(" ", 1)
        return kind, json.loads(payload)

    def send(self, kind: str, fields: dict) -> None:
        self.proc.stdin.write(f"{kind} {json.dumps(fields)}\n")
        self.proc.stdin.flush()

    def send_raw(self, line: str) -> None:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def handshake(self, version: int = 1) -> dict:
        kind, fields = self.read()
        assert kind == "hello"
        self.send("hello", {"version": version})
        return fields

    def request(self, request_id: str, genotype: str, dataset: str,
                seeds: list[int], epochs_cap: int = 300,
                feature_plan: list[str] | None = None) -> None:
        self.send("eval_request", {
            "request_id": request_id, "genotype": genotype,
            "feature_plan": feature_plan or [], "dataset": dataset,
            "seeds": seeds, "epochs_cap": epochs_cap})

    def read_result(self, request_id: str) -> tuple[str, dict]:
        """Read records until the final result/error for request_id."""
        while True:
            kind, fields = self.read()
            assert fields.get("request_id") == request_id, (kind, fields)
            if kind in ("eval_result", "eval_error"):
                return kind, fields
            assert kind == "progress"

    def close(self):
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait(timeout=10)


@pytest.fixture()
def wire():
    client = WireClient()
    yield client
    client.close()

"""Genotype evaluation: surrogate backend and worker-delegation backend.

The surrogate is callable concurrently without coordination. A
WorkerBackend owns one worker process and handles one request at a time;
run several backends to evaluate in parallel (one in-flight request per
process).
"""

from __future__ import annotations

import queue
import subprocess
import threading
from dataclasses import dataclass
from math import sqrt
from pathlib import Path

from .clock import Clock, WallClock
from .datasets import DatasetRegistry
from .errors import EvalError, ValidationError
from .genotype import decode
from .protocol import (PROTOCOL_VERSION, ProtocolViolation, format_record,
                       parse_record)
from .surrogate import surrogate_fitness


@dataclass(frozen=True)
class EvalRequest:
    request_id: str
    genotype: str  # canonical encoding
    feature_plan: tuple[str, ...]
    dataset: str
    seeds: tuple[int, ...]
    epochs_cap: int

    def __post_init__(self):
        decode(self.genotype)  # raises CodecError on malformed encodings
        if not self.seeds:
            raise ValidationError("seeds must be non-empty")
        if self.epochs_cap < 1:
            raise ValidationError("epochs_cap must be >= 1")


@dataclass
class EvalResult:
    request_id: str
    metric_mean: float
    metric_std: float
    higher_is_better: bool
    wall_ms: int
    evals: int


class SurrogateBackend:
    """Scores requests with the analytic surrogate.

    Per-seed noise is hash-mixed (``|seed=N`` appended to the hash input),
    so the per-seed draws do not depend on evaluation order; with
    noise_scale=0 the std is exactly 0.
    """

    kind = "surrogate"

    def __init__(self, registry: DatasetRegistry | None = None,
                 noise_scale: float = 0.0, clock: Clock | None = None,
                 higher_is_better: bool = True):
        self.registry = registry or DatasetRegistry()
        self.noise_scale = noise_scale
        self.clock = clock or WallClock()
        self.higher_is_better = higher_is_better

    def evaluate(self, req: EvalRequest) -> EvalResult:
        start = self.clock.now_ms()
        profile = self.registry.graph_profile(req.dataset)
        g = decode(req.genotype)
        values = [surrogate_fitness(g, profile, req.feature_plan,
                                    self.noise_scale, seed=s) for s in req.seeds]
        if all(v == values[0] for v in values):
            mean, std = values[0], 0.0  # constant draws: exact, no float drift
        else:
            mean = sum(values) / len(values)
            std = sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        return EvalResult(req.request_id, mean, std, self.higher_is_better,
                          self.clock.now_ms() - start, len(values))

    def close(self) -> None:
        pass


class _WorkerProcess:
    """One worker subprocess with a line reader thread and handshake."""

    def __init__(self, command: list[str], timeout_s: float, cwd: str | None = None):
        self.timeout_s = timeout_s
        try:
            self.proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                cwd=cwd, text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise EvalError(f"cannot launch worker {command!r}: {exc}", reason="worker")
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        self._handshake()

    def _read_loop(self) -> None:
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _next_line(self) -> str:
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise EvalError(f"worker timed out after {self.timeout_s}s", reason="timeout")
        if line is None:
            raise EvalError("worker closed its output stream", reason="protocol")
        return line

    def send(self, line: str) -> None:
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EvalError(f"worker pipe broken: {exc}", reason="protocol")

    def _handshake(self) -> None:
        line = self._next_line()
        try:
            kind, fields = parse_record(line)
        except ProtocolViolation as exc:
            raise EvalError(f"bad handshake: {exc}", reason="protocol", raw=exc.raw)
        if kind != "hello":
            raise EvalError(f"expected hello record, got {kind!r}", reason="protocol",
                            raw=line.encode("utf-8"))
        if fields["version"] != PROTOCOL_VERSION:
            raise EvalError(
                f"protocol version mismatch: worker speaks {fields['version']}, "
                f"client speaks {PROTOCOL_VERSION}", reason="protocol")
        self.send(format_record("hello", {"version": PROTOCOL_VERSION}))

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass


class WorkerBackend:
    """Delegates evaluation to an external training worker over the wire
    protocol. One process, one in-flight request at a time."""

    kind = "worker"

    def __init__(self, command: list[str], timeout_s: float = 600.0,
                 clock: Clock | None = None, higher_is_better: bool = True,
                 cwd: str | Path | None = None):
        self.command = list(command)
        self.timeout_s = timeout_s
        self.clock = clock or WallClock()
        self.higher_is_better = higher_is_better
        self.cwd = str(cwd) if cwd is not None else None
        self._proc: _WorkerProcess | None = None
        self._lock = threading.Lock()
        self.progress_log: list[dict] = []

    def _ensure_proc(self) -> _WorkerProcess:
        if self._proc is None:
            self._proc = _WorkerProcess(self.command, self.timeout_s, self.cwd)
        return self._proc

    def _drop_proc(self) -> None:
        if self._proc is not None:
            self._proc.close()
            self._proc = None

    def evaluate(self, req: EvalRequest) -> EvalResult:
        with self._lock:
            start = self.clock.now_ms()
            try:
                proc = self._ensure_proc()
                proc.send(format_record("eval_request", {
                    "request_id": req.request_id,
                    "genotype": req.genotype,
                    "feature_plan": list(req.feature_plan),
                    "dataset": req.dataset,
                    "seeds": list(req.seeds),
                    "epochs_cap": req.epochs_cap,
                }))
                while True:
                    line = proc._next_line()
                    try:
                        kind, fields = parse_record(line)
                    except ProtocolViolation as exc:
                        raise EvalError(f"protocol violation: {exc}",
                                        reason="protocol", raw=exc.raw)
                    if fields.get("request_id") != req.request_id:
                        raise EvalError(
                            f"response for unexpected request {fields.get('request_id')!r}",
                            reason="protocol", raw=line.encode("utf-8"))
                    if kind == "progress":
                        self.progress_log.append(fields)
                        continue
                    if kind == "eval_error":
                        raise EvalError(f"worker error: {fields['message']}", reason="worker")
                    if kind == "eval_result":
                        return EvalResult(
                            request_id=req.request_id,
                            metric_mean=float(fields["metric_mean"]),
                            metric_std=float(fields["metric_std"]),
                            higher_is_better=self.higher_is_better,
                            wall_ms=self.clock.now_ms() - start,
                            evals=len(req.seeds))
                    raise EvalError(f"unexpected record kind {kind!r} mid-request",
                                    reason="protocol", raw=line.encode("utf-8"))
            except EvalError as exc:
                # timeouts and protocol violations poison the process;
                # plain worker errors keep it alive for the next request
                if exc.reason in ("timeout", "protocol"):
                    self._drop_proc()
                raise

    def close(self) -> None:
        with self._lock:
            self._drop_proc()


def evaluate(req: EvalRequest, backend) -> EvalResult:
    """Evaluate one request on the configured backend."""
    return backend.evaluate(req)

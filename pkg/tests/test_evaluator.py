"""Evaluation backends and the worker wire protocol."""

from __future__ import annotations

import json

import pytest

from archon.clock import FixedClock
from archon.errors import CodecError, EvalError, UnknownDatasetError
from archon.evaluator import (EvalRequest, SurrogateBackend, WorkerBackend,
                              evaluate)
from archon.genotype import default_space
from archon.protocol import ProtocolViolation, format_record, parse_record
from archon.rng import SplitMix64
from archon.search import EvolveBudget, evolve

from .conftest import STUB_WORKER

GOOD = "v1;ops=gcn,gcn;dim=64;act=relu;drop=0.50;skips=0-2;pool=none;lr=0.005;wd=0.0005;ep=200"


def _request(request_id="req-0001", seeds=(1,), genotype=GOOD, dataset="toy-cora"):
    return EvalRequest(request_id, genotype, (), dataset, tuple(seeds), 300)


class TestProtocolCodec:
    def test_roundtrip(self):
        line = format_record("eval_result", {"request_id": "r1", "metric_mean": 0.8,
                                             "metric_std": 0.0, "wall_ms": 12})
        kind, fields = parse_record(line)
        assert kind == "eval_result" and fields["metric_mean"] == 0.8

    def test_missing_field_rejected(self):
        with pytest.raises(ProtocolViolation):
            format_record("hello", {})
        with pytest.raises(ProtocolViolation):
            parse_record('hello {"ver": 2}')

    def test_unknown_kind_rejected(self):
        with pytest.raises(ProtocolViolation):
            parse_record('nonsense {"a": 1}')

    def test_non_object_payload_rejected(self):
        with pytest.raises(ProtocolViolation):
            parse_record("progress [1,2,3]")


class TestSurrogateBackend:
    def test_zero_noise_zero_std(self):
        backend = SurrogateBackend(noise_scale=0.0, clock=FixedClock())
        result = evaluate(_request(seeds=(1, 2, 3)), backend)
        assert result.metric_std == 0.0
        assert result.metric_mean == 0.80
        assert result.evals == 3

    def test_hand_value_single_seed(self):
        backend = SurrogateBackend(noise_scale=0.0, clock=FixedClock())
        assert evaluate(_request(seeds=(1,)), backend).metric_mean == 0.80

    def test_noise_gives_positive_std(self):
        backend = SurrogateBackend(noise_scale=0.2, clock=FixedClock())
        result = evaluate(_request(seeds=(1, 2, 3, 4)), backend)
        assert result.metric_std > 0.0

    def test_malformed_genotype_codec_error(self):
        with pytest.raises(CodecError):
            _request(genotype="v1;ops=bogus")

    def test_unknown_dataset(self):
        backend = SurrogateBackend(clock=FixedClock())
        with pytest.raises(UnknownDatasetError):
            evaluate(_request(dataset="mystery"), backend)


def _golden_script(tmp_path, request_id="req-0001", mean=0.8123, std=0.0456,
                   wall_ms=777, with_progress=True):
    lines = []
    if with_progress:
        lines.append("progress " + json.dumps(
            {"request_id": request_id, "epoch": 10, "metric": 0.5}))
    lines.append("eval_result " + json.dumps(
        {"request_id": request_id, "metric_mean": mean, "metric_std": std,
         "wall_ms": wall_ms}))
    path = tmp_path / "golden.jsonl"
    path.write_text(json.dumps({"request_id": request_id, "lines": lines}) + "\n",
                    encoding="utf-8")
    return path


def _worker(python_exe, mode, script=None, timeout_s=10.0):
    command = [python_exe, str(STUB_WORKER), "--mode", mode]
    if script is not None:
        command += ["--script", str(script)]
    return WorkerBackend(command, timeout_s=timeout_s, clock=FixedClock())


class TestWorkerBackend:
    def test_golden_transcript_result(self, tmp_path, python_exe):
        script = _golden_script(tmp_path)
        backend = _worker(python_exe, "golden", script)
        try:
            result = evaluate(_request(), backend)
        finally:
            backend.close()
        assert result.metric_mean == 0.8123
        assert result.metric_std == 0.0456
        assert result.request_id == "req-0001"
        assert backend.progress_log == [
            {"request_id": "req-0001", "epoch": 10, "metric": 0.5}]

    def test_two_requests_one_process(self, tmp_path, python_exe):
        entries = []
        for rid, mean in [("req-0001", 0.7), ("req-0002", 0.9)]:
            entries.append(json.dumps({"request_id": rid, "lines": [
                "eval_result " + json.dumps({"request_id": rid, "metric_mean": mean,
                                             "metric_std": 0.0, "wall_ms": 1})]}))
        script = tmp_path / "golden.jsonl"
        script.write_text("\n".join(entries) + "\n", encoding="utf-8")
        backend = _worker(python_exe, "golden", script)
        try:
            assert evaluate(_request("req-0001"), backend).metric_mean == 0.7
            assert evaluate(_request("req-0002"), backend).metric_mean == 0.9
        finally:
            backend.close()

    def test_version_mismatch_refused(self, python_exe):
        backend = _worker(python_exe, "badversion")
        try:
            with pytest.raises(EvalError) as excinfo:
                evaluate(_request(), backend)
        finally:
            backend.close()
        assert excinfo.value.reason == "protocol"
        assert "version" in str(excinfo.value)

    def test_timeout(self, python_exe):
        backend = _worker(python_exe, "timeout", timeout_s=1.0)
        try:
            with pytest.raises(EvalError) as excinfo:
                evaluate(_request(), backend)
        finally:
            backend.close()
        assert excinfo.value.reason == "timeout"

    def test_protocol_violation_raw_bytes_logged(self, python_exe):
        backend = _worker(python_exe, "garbage")
        try:
            with pytest.raises(EvalError) as excinfo:
                evaluate(_request(), backend)
        finally:
            backend.close()
        assert excinfo.value.reason == "protocol"
        assert excinfo.value.raw is not None

    def test_worker_error_keeps_process_alive(self, tmp_path, python_exe):
        script = _golden_script(tmp_path, request_id="req-0002")
        backend = _worker(python_exe, "golden", script)
        try:
            with pytest.raises(EvalError) as excinfo:
                evaluate(_request("req-0001"), backend)  # no golden entry
            assert excinfo.value.reason == "worker"
            assert evaluate(_request("req-0002"), backend).metric_mean == 0.8123
        finally:
            backend.close()

    def test_search_scores_timeouts_zero_and_continues(self, python_exe):
        backend = _worker(python_exe, "timeout", timeout_s=0.8)
        space = default_space("node-classification")
        counter = iter(range(1, 100))

        def evaluator(g):
            from archon.genotype import encode
            req = EvalRequest(f"req-{next(counter):04d}", encode(g), (),
                              "toy-cora", (1,), 300)
            return evaluate(req, backend).metric_mean

        try:
            trace = evolve(space, evaluator, EvolveBudget(2, 1), [], SplitMix64(1))
        finally:
            backend.close()
        assert len(trace.failures) == 2
        assert all(score == 0.0 for _, score in trace.generations[0])
        assert trace.best_per_generation[-1][1] == 0.0

"""Protocol conformance over real pipes: handshake, one response per
request, failure records that keep the session alive."""

from __future__ import annotations

from .conftest import GCN2, WireClient


def test_handshake_announces_version(wire):
    fields = wire.handshake()
    assert fields == {"version": 1}


def test_version_mismatch_refused():
    client = WireClient()
    try:
        client.handshake(version=99)
        client.proc.wait(timeout=10)
        assert client.proc.returncode == 2
    finally:
        client.close()


def test_toy_cora_round_trip(wire):
    wire.handshake()
    wire.request("r1", GCN2, "toy-cora", seeds=[1], epochs_cap=50)
    kind, fields = wire.read_result("r1")
    assert kind == "eval_result"
    assert 0.0 <= fields["metric_mean"] <= 1.0
    assert fields["metric_std"] == 0.0  # one seed
    assert fields["wall_ms"] >= 0


def test_progress_records_carry_request_id(wire):
    wire.handshake()
    wire.request("r1", GCN2, "toy-cora", seeds=[1], epochs_cap=40)
    kinds = []
    while True:
        kind, fields = wire.read()
        assert fields["request_id"] == "r1"
        kinds.append(kind)
        if kind == "eval_result":
            break
    assert "progress" in kinds


def test_malformed_genotype_names_codec_error(wire):
    wire.handshake()
    wire.request("r1", "v1;ops=bogus;dim=64", "toy-cora", seeds=[1])
    kind, fields = wire.read_result("r1")
    assert kind == "eval_error"
    assert "CodecError" in fields["message"]


def test_unknown_dataset_eval_error(wire):
    wire.handshake()
    wire.request("r1", GCN2, "no-such-dataset", seeds=[1])
    kind, fields = wire.read_result("r1")
    assert kind == "eval_error"
    assert "dataset" in fields["message"]


def test_exactly_one_response_per_request_and_survives_errors(wire):
    """Error responses do not kill the worker; ordering is request order."""
    wire.handshake()
    wire.request("r1", "not-a-genotype", "toy-cora", seeds=[1])
    wire.request("r2", GCN2, "toy-cora", seeds=[1], epochs_cap=30)
    wire.request("r3", GCN2, "missing-data", seeds=[1])
    kind1, _ = wire.read_result("r1")
    kind2, fields2 = wire.read_result("r2")
    kind3, _ = wire.read_result("r3")
    assert (kind1, kind2, kind3) == ("eval_error", "eval_result", "eval_error")
    assert fields2["metric_mean"] > 0.0


def test_unparseable_line_answered_and_ignored(wire):
    wire.handshake()
    wire.send_raw("this is not a record")
    kind, fields = wire.read()
    assert kind == "eval_error" and fields["request_id"] == ""
    wire.request("r1", GCN2, "toy-cora", seeds=[1], epochs_cap=20)
    kind, _ = wire.read_result("r1")
    assert kind == "eval_result"


def test_pooling_mismatch_is_request_error(wire):
    wire.handshake()
    pooled = GCN2.replace("pool=none", "pool=mean")
    wire.request("r1", pooled, "toy-cora", seeds=[1])
    kind, fields = wire.read_result("r1")
    assert kind == "eval_error"
    assert "pooling" in fields["message"]


def test_graph_level_dataset_with_pooling(wire):
    wire.handshake()
    genotype = "v1;ops=gin,gin;dim=32;act=relu;drop=0.20;skips=;pool=mean;lr=0.01;wd=0;ep=100"
    wire.request("r1", genotype, "toy-mol", seeds=[1], epochs_cap=60)
    kind, fields = wire.read_result("r1")
    assert kind == "eval_result"
    assert fields["metric_mean"] >= 0.5  # two balanced classes, learnable signal

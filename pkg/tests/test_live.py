"""Live HTTP adapters against a local stub service, and the LLM re-rank
retrieval mode."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from archon.errors import ConfigError, EmbedError
from archon.gateway import (HashEmbedder, LiveEmbedder, LiveProvider,
                            ScriptedProvider, envelope_digest, complete,
                            make_envelope)
from archon.knowledge import (KnowledgeItem, KnowledgeStore, RetrievalQuery,
                              quantize_unit)


class _StubService(BaseHTTPRequestHandler):
    """Chat-completion and embedding endpoints with canned answers."""

    completions: list[dict] = []
    requests_seen: list[dict] = []
    fail_embeddings = False

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        type(self).requests_seen.append({"path": self.path, "body": body})
        if self.path.endswith("/chat/completions"):
            payload = self.completions.pop(0) if self.completions else {"summary": "ok"}
            answer = {"choices": [{"message": {"content": json.dumps(payload)}}]}
        elif self.path.endswith("/embeddings"):
            if type(self).fail_embeddings:
                self.send_response(500)
                self.end_headers()
                return
            answer = {"data": [{"embedding": [1.0, 2.0, 2.0, 0.0]}
                               for _ in body["input"]]}
        else:
            self.send_response(404)
            self.end_headers()
            return
        data = json.dumps(answer).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_service():
    _StubService.completions = []
    _StubService.requests_seen = []
    _StubService.fail_embeddings = False
    server = HTTPServer(("127.0.0.1", 0), _StubService)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _StubService
    server.shutdown()


class TestLiveProvider:
    def test_completion_roundtrip(self, stub_service):
        base_url, stub = stub_service
        stub.completions = [{"task_type": "node-classification",
                             "dataset": "Cora", "metric": "accuracy"}]
        provider = LiveProvider(base_url, "test-model", api_key="k")
        env = make_envelope("make-task-plan", {"instruction": "classify articles"})
        resp = complete(env, provider)
        assert resp.payload["dataset"] == "Cora"
        request = stub.requests_seen[0]
        assert request["body"]["model"] == "test-model"
        assert "classify articles" in request["body"]["messages"][0]["content"]

    def test_validation_feedback_in_retry_prompt(self, stub_service):
        base_url, stub = stub_service
        stub.completions = [
            {"task_type": "node-classification"},  # fails schema
            {"task_type": "node-classification", "dataset": "Cora",
             "metric": "accuracy"},
        ]
        provider = LiveProvider(base_url, "test-model")
        env = make_envelope("make-task-plan", {"instruction": "classify articles"})
        resp = complete(env, provider)
        assert resp.attempts == 2
        retry_prompt = stub.requests_seen[1]["body"]["messages"][0]["content"]
        assert "failed validation" in retry_prompt


class TestLiveEmbedder:
    def test_normalizes_and_discovers_dim(self, stub_service):
        base_url, _ = stub_service
        embedder = LiveEmbedder(base_url, "all-MiniLM-L6-v2")
        vectors = embedder.embed(["hello", ""])
        assert embedder.dim == 4
        assert vectors[0] == pytest.approx([1 / 3, 2 / 3, 2 / 3, 0.0])
        assert vectors[1] == [0.0, 0.0, 0.0, 0.0]  # empty text -> zero vector

    def test_unreachable_service_embed_error(self, stub_service):
        base_url, stub = stub_service
        stub.fail_embeddings = True
        embedder = LiveEmbedder(base_url, "all-MiniLM-L6-v2", retries=2)
        with pytest.raises(EmbedError):
            embedder.embed(["hello"])

    def test_snapshot_header_records_live_dim(self, stub_service, tmp_path):
        base_url, _ = stub_service
        embedder = LiveEmbedder(base_url, "all-MiniLM-L6-v2")
        store = KnowledgeStore(embedder=embedder)
        from archon.gateway import embed
        vec = embed(["report text"], embedder)[0]
        store._add_items([KnowledgeItem("it-1", "d", "evaluation-result",
                                        "experiment-report", "report text",
                                        quantize_unit(vec))])
        path = tmp_path / "live.kb"
        store.snapshot_save(path)
        header = path.read_text().splitlines()[0]
        assert header == "archon-kb v1 embedder=all-MiniLM-L6-v2 dim=4"
        with pytest.raises(ConfigError):
            KnowledgeStore.snapshot_load(path)  # needs a matching embedder
        loaded = KnowledgeStore.snapshot_load(path, embedder=embedder)
        assert len(loaded) == 1


class TestLlmRerank:
    def _store_with(self, texts):
        store = KnowledgeStore(embedder=HashEmbedder())
        vecs = HashEmbedder().embed(texts)
        store._add_items([
            KnowledgeItem(f"it-{i}", "d", "architecture-design", "paper", t,
                          quantize_unit(v))
            for i, (t, v) in enumerate(zip(texts, vecs))])
        return store

    def test_rerank_reorders_within_final_k(self):
        store = self._store_with(["gcn skip", "gcn", "pooling"])
        baseline = store.retrieve(RetrievalQuery("skip", "data-agent", 5, 3))
        slots = {"stage": "data-agent", "query": "skip", "knowledge_count": "3"}
        provider = ScriptedProvider({
            ("rerank-knowledge", envelope_digest(slots)): {"order": [2, 0]}})
        reranked = store.retrieve(RetrievalQuery("skip", "data-agent", 5, 3),
                                  rerank_provider=provider)
        assert [e.item_id for e in reranked.entries] == \
               [baseline.entries[2].item_id, baseline.entries[0].item_id]
        assert len(reranked.entries) <= 3

    def test_out_of_range_order_rejected(self):
        store = self._store_with(["gcn skip", "gcn"])
        slots = {"stage": "data-agent", "query": "skip", "knowledge_count": "2"}
        provider = ScriptedProvider({
            ("rerank-knowledge", envelope_digest(slots)): {"order": [0, 5]}})
        from archon.errors import CompletionError
        with pytest.raises(CompletionError):
            store.retrieve(RetrievalQuery("skip", "data-agent", 5, 2),
                           rerank_provider=provider)

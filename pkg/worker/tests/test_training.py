"""Training-quality checks, including the two worker acceptance criteria:
the Cora-scale sanity bound and the end-to-end run against the engine."""

from __future__ import annotations

import sys
import time

import pytest

from .conftest import DATASETS, GCN2, WireClient


class TestWorkerSanity:
    def test_two_layer_gcn_on_cora(self):
        """2-layer GCN reaches >= 0.78 mean test accuracy over 3 seeds on
        the Cora-scale citation fixture, within the 10-minute CPU budget."""
        started = time.monotonic()
        client = WireClient(timeout=600)
        try:
            client.handshake()
            client.request("sanity-1", GCN2, "cora", seeds=[1, 2, 3], epochs_cap=200)
            kind, fields = client.read_result("sanity-1")
        finally:
            client.close()
        elapsed = time.monotonic() - started
        assert kind == "eval_result", fields
        assert fields["metric_mean"] >= 0.78, fields
        assert elapsed < 600.0
        print(f"\n[acceptance] PASS worker-sanity "
              f"(cora accuracy {fields['metric_mean']:.4f} in {elapsed:.0f}s)")

    def test_repeat_seed_identical_metric(self):
        """Same request with seeds=[7] twice in one session: identical means."""
        client = WireClient(timeout=120)
        try:
            client.handshake()
            client.request("d1", GCN2, "toy-cora", seeds=[7], epochs_cap=60)
            _, first = client.read_result("d1")
            client.request("d2", GCN2, "toy-cora", seeds=[7], epochs_cap=60)
            _, second = client.read_result("d2")
        finally:
            client.close()
        assert first["metric_mean"] == second["metric_mean"]


class TestEndToEndWithEngine:
    """Drive the engine's pipeline with this worker as the backend."""

    BASELINE = "v1;ops=gcn,gcn;dim=64;act=relu;drop=0.50;skips=;pool=none;lr=0.005;wd=0.0005;ep=200"
    INSTRUCTION = "design a gnn for the toy citation graph"

    def _scripted_provider(self):
        from archon.gateway import ScriptedProvider, envelope_digest

        entries = [
            ("make-task-plan", {"instruction": self.INSTRUCTION},
             {"task_type": "node-classification", "dataset": "toy-cora",
              "metric": "accuracy"}),
            ("make-feature-plan",
             {"task_type": "node-classification", "dataset": "toy-cora",
              "kind": "homophilous-node", "knowledge_count": "1", "hint": ""},
             {"directives": ["normalize-features"], "citations": []}),
            ("make-search-config",
             {"task_type": "node-classification", "dataset": "toy-cora",
              "kind": "homophilous-node", "knowledge_count": "1"},
             {"allowed_ops": ["gcn", "sage"], "max_layers": 2,
              "allowed_dims": [32, 64], "allow_skips": True,
              "algorithm": "evolutionary",
              "params": {"population": 4, "generations": 2}, "citations": []}),
            ("review-results",
             {"dataset": "toy-cora", "metric": "accuracy",
              "revisions_used": "0", "meets_target": "yes"},
             {"verdict": "accept", "hints": [], "rationale": "good enough"}),
            ("compile-report",
             {"dataset": "toy-cora", "metric": "accuracy", "revisions_used": "0"},
             {"summary": "worker-backed search finished"}),
        ]
        return ScriptedProvider({
            (template_id, envelope_digest(slots)): payload
            for template_id, slots, payload in entries})

    def test_pipeline_with_worker_beats_gcn_baseline(self):
        from archon.agents import PipelineSettings, run_pipeline
        from archon.clock import FixedClock
        from archon.datasets import DatasetRegistry
        from archon.evaluator import EvalRequest, WorkerBackend, evaluate
        from archon.gateway import HashEmbedder
        from archon.knowledge import KnowledgeItem, KnowledgeStore, quantize_unit
        from archon.plans import Budget

        prior = KnowledgeStore(embedder=HashEmbedder())
        seed_text = "gcn layers with hidden dimension 64 work well on citation networks"
        vec = HashEmbedder().embed([seed_text])[0]
        prior._add_items([KnowledgeItem("seed#f01", "seed-doc", "architecture-design",
                                        "paper", seed_text, quantize_unit(vec))])

        worker_cmd = [sys.executable, "-m", "archon_worker", "--data-dir", str(DATASETS)]
        backend = WorkerBackend(worker_cmd, timeout_s=120.0, clock=FixedClock())
        settings = PipelineSettings(
            provider=self._scripted_provider(),
            prior_store=prior,
            experiment_store=KnowledgeStore(embedder=HashEmbedder()),
            backend=backend,
            registry=DatasetRegistry(),
            budget=Budget(8, 1, 1),
            rng_seed=11,
            clock=FixedClock(),
            epochs_cap=100)
        try:
            result = run_pipeline(self.INSTRUCTION, settings)
            # seeded genotype == the baseline, so it was evaluated in gen 0
            seed_encodings = {enc for gen in result.traces[0].generations[:1]
                              for enc, _ in gen}
            assert self.BASELINE in seed_encodings
            baseline = evaluate(
                EvalRequest("baseline-1", self.BASELINE,
                            result.feature_plan.directives, "toy-cora", (1,), 100),
                backend)
        finally:
            backend.close()

        assert result.report_item_id is not None
        assert len(settings.experiment_store) == 1
        assert result.report.metric_mean >= baseline.metric_mean
        assert 0.0 <= result.report.metric_mean <= 1.0
        assert not result.traces[0].failures
        print(f"\n[acceptance] PASS worker-end-to-end "
              f"(best {result.report.metric_mean:.4f} >= gcn baseline "
              f"{baseline.metric_mean:.4f})")


class TestDirectives:
    @pytest.mark.parametrize("directive", [
        "normalize-features", "add-degree-feature", "self-loops",
        "row-normalize-adjacency", "pca-reduce"])
    def test_each_directive_trains(self, directive):
        client = WireClient(timeout=120)
        try:
            client.handshake()
            client.request("r1", GCN2, "toy-cora", seeds=[1], epochs_cap=30,
                           feature_plan=[directive])
            kind, fields = client.read_result("r1")
        finally:
            client.close()
        assert kind == "eval_result"
        assert 0.0 <= fields["metric_mean"] <= 1.0

    def test_unknown_directive_rejected(self):
        client = WireClient(timeout=60)
        try:
            client.handshake()
            client.request("r1", GCN2, "toy-cora", seeds=[1],
                           feature_plan=["sharpen-graph"])
            kind, fields = client.read_result("r1")
        finally:
            client.close()
        assert kind == "eval_error"
        assert "directive" in fields["message"]


class TestAllOps:
    @pytest.mark.parametrize("op", ["gcn", "sage", "gat", "gin", "cheb", "linear"])
    def test_each_op_trains_with_skips(self, op):
        genotype = (f"v1;ops={op},{op};dim=32;act=relu;drop=0.30;skips=0-2;"
                    f"pool=none;lr=0.01;wd=0.0005;ep=100")
        client = WireClient(timeout=120)
        try:
            client.handshake()
            client.request("r1", genotype, "toy-cora", seeds=[1], epochs_cap=40)
            kind, fields = client.read_result("r1")
        finally:
            client.close()
        assert kind == "eval_result", fields
        assert 0.0 <= fields["metric_mean"] <= 1.0

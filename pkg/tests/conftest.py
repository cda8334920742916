from __future__ import annotations

import sys
from pathlib import Path

import pytest

from archon.clock import FixedClock
from archon.datasets import DatasetRegistry
from archon.evaluator import SurrogateBackend
from archon.gateway import HashEmbedder, ScriptedProvider, Transcript
from archon.knowledge import KnowledgeStore, read_manifest
from archon.plans import Budget

REPO = Path(__file__).resolve().parents[1]
DEMO = REPO / "fixtures" / "demo"
DATASETS = REPO / "datasets"
STUB_WORKER = Path(__file__).resolve().parent / "stub_worker.py"


@pytest.fixture(scope="session")
def demo_provider() -> ScriptedProvider:
    return ScriptedProvider.from_path(DEMO / "provider.jsonl")


@pytest.fixture(scope="session")
def revise_provider() -> ScriptedProvider:
    return ScriptedProvider.from_path(DEMO / "provider_revise.jsonl")


@pytest.fixture(scope="session")
def demo_docs():
    return read_manifest(DEMO / "corpus" / "manifest.jsonl")


@pytest.fixture()
def prior_store(demo_provider, demo_docs) -> KnowledgeStore:
    """A prior KB freshly ingested from the demo corpus."""
    store = KnowledgeStore(embedder=HashEmbedder())
    transcript = Transcript()
    for doc in demo_docs:
        store.ingest_document(doc, demo_provider, transcript)
    return store


def make_settings(provider, prior_store, *, seed=42, review_target=0.0,
                  max_revisions=1, events=None, update_experiment_kb=True,
                  experiment_store=None, backend=None):
    """PipelineSettings wired for the scripted demo scenario."""
    from archon.agents import PipelineSettings

    registry = DatasetRegistry()
    return PipelineSettings(
        provider=provider,
        prior_store=prior_store,
        experiment_store=(experiment_store if experiment_store is not None
                          else KnowledgeStore(embedder=HashEmbedder())),
        backend=backend or SurrogateBackend(registry=registry, noise_scale=0.0,
                                            clock=FixedClock()),
        registry=registry,
        budget=Budget(160, max_revisions, 1),
        rng_seed=seed,
        clock=FixedClock(),
        dataset_map={"Cora": "toy-cora"},
        review_target=review_target,
        update_experiment_kb=update_experiment_kb,
        events=events)


@pytest.fixture()
def python_exe() -> str:
    return sys.executable

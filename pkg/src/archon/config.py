"""CLI configuration: versioned `archon-config v1` key-value documents.

Format: the header line, then `key = JSON-value` lines (dots nest keys;
`#` starts a comment). Relative paths resolve against the config file's
directory. Exactly one provider and one backend must be selected; the
live-provider API key comes only from the ARCHON_API_KEY environment
variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .agents import PipelineSettings
from .clock import make_clock
from .datasets import DatasetRegistry
from .errors import ConfigError
from .evaluator import SurrogateBackend, WorkerBackend
from .gateway import HashEmbedder, LiveEmbedder, LiveProvider, ScriptedProvider
from .knowledge import KnowledgeStore
from .plans import Budget

CONFIG_HEADER = "archon-config v1"
API_KEY_ENV = "ARCHON_API_KEY"

PROVIDER_KINDS = ("scripted", "live")
BACKEND_KINDS = ("surrogate", "worker")
EMBEDDER_KINDS = ("hash-v1", "live")
CLOCK_KINDS = ("fixed", "wall")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CONFIG_HEADER:
        raise ConfigError(f"{source}: first line must be {CONFIG_HEADER!r}")
    tree: dict = {}
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, raw_value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        try:
            value = json.loads(raw_value.strip())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}")
        node = tree
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{source}:{lineno}: key {key!r} collides with a scalar")
        if parts[-1] in node:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        node[parts[-1]] = value
    return tree


@dataclass
class CliConfig:
    """Validated configuration, paths resolved."""

    provider_kind: str
    backend_kind: str
    store_prior: Path
    store_experiment: Path
    provider_fixtures: Path | None = None
    provider_base_url: str | None = None
    provider_model: str | None = None
    embedder_kind: str = "hash-v1"
    embedder_base_url: str | None = None
    embedder_model: str = "all-MiniLM-L6-v2"
    backend_noise_scale: float = 0.0
    backend_worker_cmd: list[str] = field(default_factory=list)
    backend_worker_cwd: Path | None = None
    backend_timeout_s: float = 600.0
    backend_epochs_cap: int = 300
    datasets_manifest: Path | None = None
    budget: Budget = field(default_factory=lambda: Budget(160, 1, 1))
    rng_seed: int = 42
    clock_kind: str = "fixed"
    review_target: float = 0.0
    per_type_k: int = 5
    final_k: int = 8
    llm_rerank: bool = False
    update_experiment_kb: bool = True
    dataset_map: dict[str, str] = field(default_factory=dict)


def _get(tree: dict, key: str, default=None):
    node = tree
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node


def _require(tree: dict, key: str):
    value = _get(tree, key)
    if value is None:
        raise ConfigError(f"missing required config field {key!r}")
    return value


def _expect(value, types, key: str):
    if not isinstance(value, types):
        raise ConfigError(f"config field {key!r} has the wrong type")
    return value


def load_config(path: str | Path) -> CliConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    tree = parse_config_text(path.read_text(encoding="utf-8"), str(path))
    base = path.parent

    def resolve(p: str | None) -> Path | None:
        return (base / p) if p is not None else None

    provider_kind = _require(tree, "provider.kind")
    if provider_kind not in PROVIDER_KINDS:
        raise ConfigError(f"provider.kind must be one of {PROVIDER_KINDS}")
    backend_kind = _require(tree, "backend.kind")
    if backend_kind not in BACKEND_KINDS:
        raise ConfigError(f"backend.kind must be one of {BACKEND_KINDS}")
    embedder_kind = _get(tree, "embedder.kind", "hash-v1")
    if embedder_kind not in EMBEDDER_KINDS:
        raise ConfigError(f"embedder.kind must be one of {EMBEDDER_KINDS}")
    clock_kind = _get(tree, "clock", "fixed")
    if clock_kind not in CLOCK_KINDS:
        raise ConfigError(f"clock must be one of {CLOCK_KINDS}")

    if provider_kind == "scripted" and _get(tree, "provider.fixtures") is None:
        raise ConfigError("provider.fixtures is required for the scripted provider")
    if provider_kind == "live" and _get(tree, "provider.base_url") is None:
        raise ConfigError("provider.base_url is required for the live provider")
    if embedder_kind == "live" and _get(tree, "embedder.base_url") is None:
        raise ConfigError("embedder.base_url is required for the live embedder")
    if backend_kind == "worker" and not _get(tree, "backend.worker_cmd"):
        raise ConfigError("backend.worker_cmd is required for the worker backend")

    budget = Budget(
        max_candidates=_expect(_get(tree, "budget.max_candidates", 160), int,
                               "budget.max_candidates"),
        max_revisions=_expect(_get(tree, "budget.max_revisions", 1), int,
                              "budget.max_revisions"),
        seeds_per_eval=_expect(_get(tree, "budget.seeds_per_eval", 1), int,
                               "budget.seeds_per_eval"))

    dataset_map = _get(tree, "dataset_map", {}) or {}
    if not isinstance(dataset_map, dict) or not all(
            isinstance(v, str) for v in dataset_map.values()):
        raise ConfigError("dataset_map entries must map names to strings")

    worker_cmd = _get(tree, "backend.worker_cmd", [])
    if worker_cmd and (not isinstance(worker_cmd, list)
                       or not all(isinstance(c, str) for c in worker_cmd)):
        raise ConfigError("backend.worker_cmd must be a list of strings")

    return CliConfig(
        provider_kind=provider_kind,
        backend_kind=backend_kind,
        store_prior=resolve(_require(tree, "store.prior")),
        store_experiment=resolve(_require(tree, "store.experiment")),
        provider_fixtures=resolve(_get(tree, "provider.fixtures")),
        provider_base_url=_get(tree, "provider.base_url"),
        provider_model=_get(tree, "provider.model"),
        embedder_kind=embedder_kind,
        embedder_base_url=_get(tree, "embedder.base_url"),
        embedder_model=_get(tree, "embedder.model", "all-MiniLM-L6-v2"),
        backend_noise_scale=float(_expect(_get(tree, "backend.noise_scale", 0.0),
                                          (int, float), "backend.noise_scale")),
        backend_worker_cmd=list(worker_cmd),
        backend_worker_cwd=resolve(_get(tree, "backend.worker_cwd")),
        backend_timeout_s=float(_expect(_get(tree, "backend.timeout_s", 600.0),
                                        (int, float), "backend.timeout_s")),
        backend_epochs_cap=_expect(_get(tree, "backend.epochs_cap", 300), int,
                                   "backend.epochs_cap"),
        datasets_manifest=resolve(_get(tree, "datasets.manifest")),
        budget=budget,
        rng_seed=_expect(_get(tree, "rng.seed", 42), int, "rng.seed"),
        clock_kind=clock_kind,
        review_target=float(_expect(_get(tree, "review.target", 0.0), (int, float),
                                    "review.target")),
        per_type_k=_expect(_get(tree, "retrieval.per_type_k", 5), int,
                           "retrieval.per_type_k"),
        final_k=_expect(_get(tree, "retrieval.final_k", 8), int, "retrieval.final_k"),
        llm_rerank=_expect(_get(tree, "retrieval.llm_rerank", False), bool,
                           "retrieval.llm_rerank"),
        update_experiment_kb=_expect(_get(tree, "knowledge.update_experiment", True),
                                     bool, "knowledge.update_experiment"),
        dataset_map=dict(dataset_map))


def build_embedder(config: CliConfig):
    if config.embedder_kind == "hash-v1":
        return HashEmbedder()
    return LiveEmbedder(config.embedder_base_url, config.embedder_model,
                        api_key=os.environ.get(API_KEY_ENV))


def build_provider(config: CliConfig):
    if config.provider_kind == "scripted":
        return ScriptedProvider.from_path(config.provider_fixtures)
    return LiveProvider(config.provider_base_url, config.provider_model or "default",
                        api_key=os.environ.get(API_KEY_ENV))


def load_store(path: Path, embedder) -> KnowledgeStore:
    if path.exists():
        return KnowledgeStore.snapshot_load(path, embedder=embedder)
    return KnowledgeStore(embedder=embedder)


def build_settings(config: CliConfig, seed: int | None = None,
                   events=None) -> PipelineSettings:
    """Materialize runtime objects from a validated config."""
    clock = make_clock(config.clock_kind)
    registry = (DatasetRegistry.from_manifest(config.datasets_manifest)
                if config.datasets_manifest else DatasetRegistry())
    if config.backend_kind == "surrogate":
        backend = SurrogateBackend(registry=registry,
                                   noise_scale=config.backend_noise_scale, clock=clock)
    else:
        backend = WorkerBackend(config.backend_worker_cmd,
                                timeout_s=config.backend_timeout_s, clock=clock,
                                cwd=config.backend_worker_cwd)
    embedder = build_embedder(config)
    provider = build_provider(config)
    return PipelineSettings(
        provider=provider,
        prior_store=load_store(config.store_prior, embedder),
        experiment_store=load_store(config.store_experiment, build_embedder(config)),
        backend=backend,
        registry=registry,
        budget=config.budget,
        rng_seed=seed if seed is not None else config.rng_seed,
        clock=clock,
        dataset_map=config.dataset_map,
        review_target=config.review_target,
        per_type_k=config.per_type_k,
        final_k=config.final_k,
        epochs_cap=config.backend_epochs_cap,
        update_experiment_kb=config.update_experiment_kb,
        events=events,
        rerank_provider=provider if config.llm_rerank else None)

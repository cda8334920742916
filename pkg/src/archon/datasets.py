"""Dataset registry and graph profiles.

Profiles for the built-in synthetic fixtures are frozen constants,
computed once from the shipped fixture graphs (homophily = fraction of
edges whose endpoints carry the same node label) and verified against the
files by the test suite. Additional datasets can be registered through a
manifest, in which case the profile is computed from the files at load
time.

Dataset file layout (external contract), one directory per dataset::

    nodes.tsv    node_id <TAB> label <TAB> f1,f2,...        (node-level)
                 node_id <TAB> graph_id <TAB> label <TAB> f1,f2,...  (graph-level)
    edges.tsv    src <TAB> dst           (undirected, listed once)
    graphs.tsv   graph_id <TAB> label    (graph-level only)
    train.txt / val.txt / test.txt      one id per line (node ids for
                 node-level tasks, graph ids for graph-level tasks)

registry manifest: JSON {"version": "archon-datasets v1",
"datasets": [{"name": ..., "kind": ..., "dir": ...}]} with dirs relative
to the manifest file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, UnknownDatasetError, ValidationError

KINDS = ("homophilous-node", "heterophilous-node", "graph-molecule", "ranking")
GRAPH_LEVEL_KINDS = ("graph-molecule",)

TASK_FOR_KIND = {
    "homophilous-node": "node-classification",
    "heterophilous-node": "node-classification",
    "graph-molecule": "graph-classification",
    "ranking": "link-ranking",
}

# Feature directives that help or hurt each graph kind in the surrogate.
KIND_FEATURE_EFFECTS: dict[str, dict[str, frozenset[str]]] = {
    "homophilous-node": {
        "helpful": frozenset({"normalize-features"}),
        "harmful": frozenset(),
    },
    "heterophilous-node": {
        "helpful": frozenset({"row-normalize-adjacency", "add-degree-feature"}),
        "harmful": frozenset({"self-loops"}),
    },
    "graph-molecule": {
        "helpful": frozenset({"add-degree-feature"}),
        "harmful": frozenset({"pca-reduce"}),
    },
    "ranking": {
        "helpful": frozenset({"normalize-features"}),
        "harmful": frozenset(),
    },
}


@dataclass(frozen=True)
class GraphProfile:
    dataset: str
    kind: str
    num_nodes: int
    num_edges: int
    feature_dim: int
    num_classes: int
    homophily_estimate: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown graph kind {self.kind!r}")
        for name in ("num_nodes", "num_edges", "feature_dim", "num_classes"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not 0.0 <= self.homophily_estimate <= 1.0:
            raise ValidationError("homophily_estimate must be in [0, 1]")


# Frozen profiles of the shipped synthetic fixtures (see datasets/ in the
# repository root); tests recompute these numbers from the files.
BUILTIN_PROFILES: dict[str, GraphProfile] = {
    "toy-cora": GraphProfile("toy-cora", "homophilous-node", 140, 400, 16, 7, 0.81),
    "toy-actor": GraphProfile("toy-actor", "heterophilous-node", 120, 400, 12, 5, 0.22),
    "toy-mol": GraphProfile("toy-mol", "graph-molecule", 240, 260, 8, 2, 0.35),
}


class DatasetRegistry:
    """Name -> profile lookup; built-ins plus manifest-provided datasets."""

    def __init__(self, profiles: dict[str, GraphProfile] | None = None):
        self._profiles = dict(BUILTIN_PROFILES)
        if profiles:
            self._profiles.update(profiles)

    def graph_profile(self, dataset: str) -> GraphProfile:
        if dataset not in self._profiles:
            raise UnknownDatasetError(f"unknown dataset {dataset!r}")
        return self._profiles[dataset]

    def names(self) -> list[str]:
        return sorted(self._profiles)

    @classmethod
    def from_manifest(cls, manifest_path: str | Path) -> "DatasetRegistry":
        manifest_path = Path(manifest_path)
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read dataset manifest {manifest_path}: {exc}")
        if manifest.get("version") != "archon-datasets v1":
            raise ConfigError(f"{manifest_path}: expected version 'archon-datasets v1'")
        profiles = {}
        for entry in manifest.get("datasets", []):
            for key in ("name", "kind", "dir"):
                if key not in entry:
                    raise ConfigError(f"{manifest_path}: dataset entry missing {key!r}")
            directory = manifest_path.parent / entry["dir"]
            profiles[entry["name"]] = profile_from_files(
                entry["name"], entry["kind"], directory)
        return cls(profiles)


def profile_from_files(name: str, kind: str, directory: str | Path) -> GraphProfile:
    """Compute a profile from fixture files by direct measurement."""
    directory = Path(directory)
    graph_level = kind in GRAPH_LEVEL_KINDS
    labels: dict[str, int] = {}
    feature_dim = 0
    num_nodes = 0
    for line in (directory / "nodes.tsv").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        expected = 4 if graph_level else 3
        if len(parts) != expected:
            raise ConfigError(f"{name}: nodes.tsv row has {len(parts)} fields, expected {expected}")
        node_id = parts[0]
        labels[node_id] = int(parts[2] if graph_level else parts[1])
        feature_dim = len(parts[-1].split(","))
        num_nodes += 1
    num_edges = 0
    agree = 0
    for line in (directory / "edges.tsv").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        src, dst = line.split("\t")
        num_edges += 1
        if labels[src] == labels[dst]:
            agree += 1
    if graph_level:
        graph_labels = set()
        for line in (directory / "graphs.tsv").read_text(encoding="utf-8").splitlines():
            if line.strip():
                graph_labels.add(int(line.split("\t")[1]))
        num_classes = len(graph_labels)
    else:
        num_classes = len(set(labels.values()))
    homophily = agree / num_edges if num_edges else 0.0
    return GraphProfile(name, kind, num_nodes, num_edges, feature_dim, num_classes, homophily)


_DEFAULT_REGISTRY = DatasetRegistry()


def graph_profile(dataset: str, registry: DatasetRegistry | None = None) -> GraphProfile:
    """Profile lookup against the built-in registry (or a provided one)."""
    return (registry or _DEFAULT_REGISTRY).graph_profile(dataset)

"""Dataset loading and feature-engineering directives.

Reads the engine's dataset fixture layout: nodes.tsv / edges.tsv /
train|val|test.txt per dataset directory (graph-level datasets add a
graph_id column and graphs.tsv), discovered through registry.json or by
directory name. The name "cora" falls back to the built-in synthetic
generator when no directory of that name exists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import torch


class DatasetError(RuntimeError):
    pass


@dataclass
class NodeData:
    """One node-level dataset as dense tensors."""

    x: torch.Tensor          # (n, d) float32
    y: torch.Tensor          # (n,) int64
    edges: torch.Tensor      # (m, 2) int64, undirected pairs listed once
    train_mask: torch.Tensor
    val_mask: torch.Tensor
    test_mask: torch.Tensor
    num_classes: int


@dataclass
class GraphData:
    """A graph-level dataset: per-node tensors plus graph membership."""

    x: torch.Tensor          # (n, d)
    node_graph: torch.Tensor  # (n,) graph index per node
    edges: torch.Tensor      # (m, 2) node indices
    graph_y: torch.Tensor    # (G,) labels
    train_mask: torch.Tensor  # (G,) over graphs
    val_mask: torch.Tensor
    test_mask: torch.Tensor
    num_classes: int


def _read_ids(path: Path) -> list[str]:
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()]


def _load_node_dir(directory: Path) -> NodeData:
    node_ids: list[str] = []
    labels: list[int] = []
    features: list[list[float]] = []
    for line in (directory / "nodes.tsv").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        node_id, label, feats = line.split("\t")
        node_ids.append(node_id)
        labels.append(int(label))
        features.append([float(v) for v in feats.split(",")])
    index = {node_id: i for i, node_id in enumerate(node_ids)}
    edges = []
    for line in (directory / "edges.tsv").read_text(encoding="utf-8").splitlines():
        if line.strip():
            src, dst = line.split("\t")
            edges.append((index[src], index[dst]))

    def mask(name: str) -> torch.Tensor:
        m = torch.zeros(len(node_ids), dtype=torch.bool)
        for node_id in _read_ids(directory / f"{name}.txt"):
            m[index[node_id]] = True
        return m

    return NodeData(
        x=torch.tensor(features, dtype=torch.float32),
        y=torch.tensor(labels, dtype=torch.int64),
        edges=torch.tensor(edges, dtype=torch.int64),
        train_mask=mask("train"), val_mask=mask("val"), test_mask=mask("test"),
        num_classes=len(set(labels)))


def _load_graph_dir(directory: Path) -> GraphData:
    node_ids: list[str] = []
    node_graph: list[str] = []
    features: list[list[float]] = []
    for line in (directory / "nodes.tsv").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        node_id, graph_id, _atom, feats = line.split("\t")
        node_ids.append(node_id)
        node_graph.append(graph_id)
        features.append([float(v) for v in feats.split(",")])
    node_index = {node_id: i for i, node_id in enumerate(node_ids)}
    graph_rows = [line.split("\t") for line in
                  (directory / "graphs.tsv").read_text(encoding="utf-8").splitlines()
                  if line.strip()]
    graph_ids = [gid for gid, _ in graph_rows]
    graph_index = {gid: i for i, gid in enumerate(graph_ids)}
    labels = [int(label) for _, label in graph_rows]
    edges = []
    for line in (directory / "edges.tsv").read_text(encoding="utf-8").splitlines():
        if line.strip():
            src, dst = line.split("\t")
            edges.append((node_index[src], node_index[dst]))

    def mask(name: str) -> torch.Tensor:
        m = torch.zeros(len(graph_ids), dtype=torch.bool)
        for gid in _read_ids(directory / f"{name}.txt"):
            m[graph_index[gid]] = True
        return m

    return GraphData(
        x=torch.tensor(features, dtype=torch.float32),
        node_graph=torch.tensor([graph_index[g] for g in node_graph], dtype=torch.int64),
        edges=torch.tensor(edges, dtype=torch.int64),
        graph_y=torch.tensor(labels, dtype=torch.int64),
        train_mask=mask("train"), val_mask=mask("val"), test_mask=mask("test"),
        num_classes=len(set(labels)))


class DatasetCache:
    """Loads datasets on demand and keeps them for the session."""

    def __init__(self, data_dir: str | Path | None):
        self.data_dir = Path(data_dir) if data_dir else None
        self._cache: dict[str, NodeData | GraphData] = {}

    def _registry_entry(self, name: str) -> tuple[Path, bool] | None:
        if self.data_dir is None:
            return None
        registry = self.data_dir / "registry.json"
        if registry.exists():
            manifest = json.loads(registry.read_text(encoding="utf-8"))
            for entry in manifest.get("datasets", []):
                if entry.get("name") == name:
                    directory = self.data_dir / entry["dir"]
                    return directory, entry.get("kind") == "graph-molecule"
        directory = self.data_dir / name
        if directory.exists():
            return directory, (directory / "graphs.tsv").exists()
        return None

    def load(self, name: str) -> NodeData | GraphData:
        if name in self._cache:
            return self._cache[name]
        entry = self._registry_entry(name)
        if entry is not None:
            directory, graph_level = entry
            data = _load_graph_dir(directory) if graph_level else _load_node_dir(directory)
        elif name == "cora":
            from .synth import synthetic_cora
            data = synthetic_cora()
        else:
            raise DatasetError(f"dataset {name!r} not found under {self.data_dir}")
        self._cache[name] = data
        return data


# -- feature directives -----------------------------------------------------


def apply_directives(data: NodeData | GraphData, directives: list[str]
                     ) -> tuple[NodeData | GraphData, bool]:
    """Return a copy with feature directives applied.

    self-loops and row-normalize-adjacency act on the propagation matrices
    (the second return value flags row normalization); the rest transform
    the feature matrix.
    """
    x = data.x.clone()
    row_normalize_adj = False
    for directive in directives:
        if directive == "normalize-features":
            row_sum = x.abs().sum(dim=1, keepdim=True).clamp(min=1e-12)
            x = x / row_sum
        elif directive == "add-degree-feature":
            n = x.shape[0]
            degree = torch.zeros(n, dtype=torch.float32)
            for a, b in data.edges.tolist():
                degree[a] += 1.0
                degree[b] += 1.0
            degree = degree / degree.max().clamp(min=1.0)
            x = torch.cat([x, degree.unsqueeze(1)], dim=1)
        elif directive == "pca-reduce":
            k = min(x.shape[1], 64)
            centered = x - x.mean(dim=0, keepdim=True)
            _, _, vt = torch.linalg.svd(centered, full_matrices=False)
            x = centered @ vt[:k].T
        elif directive == "row-normalize-adjacency":
            row_normalize_adj = True
        elif directive == "self-loops":
            pass  # self-loops are already part of the gcn/cheb normalization
        else:
            raise DatasetError(f"unknown feature directive {directive!r}")
    return replace(data, x=x), row_normalize_adj

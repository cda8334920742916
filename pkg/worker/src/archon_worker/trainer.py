"""Per-request training: build the model from the genotype, train per seed,
report the aggregated test metric."""

from __future__ import annotations

import time
from typing import Callable

import torch
import torch.nn.functional as F

from .codec import CodecError, parse_genotype
from .data import DatasetCache, DatasetError, GraphData, apply_directives
from .model import GenotypeModel, build_propagation


class WorkerFailure(RuntimeError):
    """Request-scoped failure; the session answers eval_error and stays up."""


def _accuracy(logits: torch.Tensor, y: torch.Tensor, mask: torch.Tensor) -> float:
    pred = logits[mask].argmax(dim=1)
    return (pred == y[mask]).float().mean().item()


def _train_one_seed(seed: int, genotype, data, prop, epochs: int,
                    progress: Callable[[int, float], None]) -> float:
    torch.manual_seed(seed)
    graph_level = isinstance(data, GraphData)
    y = data.graph_y if graph_level else data.y
    num_graphs = int(data.graph_y.shape[0]) if graph_level else None
    node_graph = data.node_graph if graph_level else None
    model = GenotypeModel(genotype, data.x.shape[1], data.num_classes)
    optimizer = torch.optim.Adam(model.parameters(), lr=genotype.lr,
                                 weight_decay=genotype.weight_decay)
    report_every = max(1, epochs // 4)
    for epoch in range(1, epochs + 1):
        model.train()
        optimizer.zero_grad()
        logits = model(data.x, prop, node_graph, num_graphs)
        loss = F.cross_entropy(logits[data.train_mask], y[data.train_mask])
        loss.backward()
        optimizer.step()
        if epoch % report_every == 0 or epoch == epochs:
            model.eval()
            with torch.no_grad():
                val_logits = model(data.x, prop, node_graph, num_graphs)
            progress(epoch, _accuracy(val_logits, y, data.val_mask))
    model.eval()
    with torch.no_grad():
        logits = model(data.x, prop, node_graph, num_graphs)
    return _accuracy(logits, y, data.test_mask)


def evaluate_request(fields: dict, cache: DatasetCache,
                     progress: Callable[[int, float], None]) -> dict:
    """Handle one eval_request; returns eval_result fields or raises
    WorkerFailure with a message for eval_error."""
    started = time.monotonic()
    try:
        genotype = parse_genotype(fields["genotype"])
    except CodecError as exc:
        raise WorkerFailure(str(exc))  # message carries "CodecError: ..."
    try:
        data = cache.load(fields["dataset"])
    except DatasetError as exc:
        raise WorkerFailure(f"dataset: {exc}")

    graph_level = isinstance(data, GraphData)
    if graph_level and genotype.pooling == "none":
        raise WorkerFailure("graph-level dataset requires pooling")
    if not graph_level and genotype.pooling != "none":
        raise WorkerFailure("pooling set on a node-level dataset")

    feature_plan = fields.get("feature_plan") or []
    if not isinstance(feature_plan, list) or any(not isinstance(d, str)
                                                 for d in feature_plan):
        raise WorkerFailure("feature_plan must be a list of directive names")
    try:
        data, row_normalize = apply_directives(data, feature_plan)
    except DatasetError as exc:
        raise WorkerFailure(str(exc))

    seeds = fields.get("seeds") or []
    if not seeds:
        raise WorkerFailure("seeds must be non-empty")
    epochs = min(genotype.epochs, int(fields.get("epochs_cap") or genotype.epochs))
    prop = build_propagation(data.x.shape[0], data.edges, genotype.layers,
                             row_normalize)
    metrics = [_train_one_seed(int(seed), genotype, data, prop, epochs, progress)
               for seed in seeds]
    mean = sum(metrics) / len(metrics)
    std = (sum((m - mean) ** 2 for m in metrics) / len(metrics)) ** 0.5
    return {
        "request_id": fields["request_id"],
        "metric_mean": mean,
        "metric_std": std,
        "wall_ms": int((time.monotonic() - started) * 1000),
    }

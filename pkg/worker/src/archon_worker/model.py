"""Dense GNN layers and the genotype-to-model builder.

Graphs at this scale fit dense (n, n) propagation matrices comfortably,
and dense matmuls keep CPU training deterministic under a fixed torch
seed. Skip connections are realized as feature concatenation of the
cited earlier block outputs (block 0 is the raw input), so each layer's
input width is computed from the genotype.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .codec import Genotype


def build_propagation(num_nodes: int, edges: torch.Tensor, ops: tuple[str, ...],
                      row_normalize: bool) -> dict[str, torch.Tensor]:
    """Precompute the propagation operators the genotype's ops need.

    gcn/cheb fold self-loops into their normalization (row-normalized
    D^-1(A+I) when the row-normalize-adjacency directive is active,
    symmetric D^-1/2(A+I)D^-1/2 otherwise); sage uses the neighbor mean,
    gin the neighbor sum, gat an adjacency mask with self-loops.
    """
    adj = torch.zeros((num_nodes, num_nodes), dtype=torch.float32)
    if edges.numel():
        adj[edges[:, 0], edges[:, 1]] = 1.0
        adj[edges[:, 1], edges[:, 0]] = 1.0
    out: dict[str, torch.Tensor] = {}
    if "gcn" in ops or "cheb" in ops:
        loop = adj + torch.eye(num_nodes)
        degree = loop.sum(dim=1)
        if row_normalize:
            out["gcn"] = loop / degree.unsqueeze(1)
        else:
            inv_sqrt = degree.pow(-0.5)
            out["gcn"] = inv_sqrt.unsqueeze(1) * loop * inv_sqrt.unsqueeze(0)
    if "cheb" in ops:
        degree = adj.sum(dim=1).clamp(min=1.0)
        inv_sqrt = degree.pow(-0.5)
        # scaled Laplacian term for K=2 Chebyshev: L - I = -D^-1/2 A D^-1/2
        out["cheb"] = -(inv_sqrt.unsqueeze(1) * adj * inv_sqrt.unsqueeze(0))
    if "sage" in ops:
        degree = adj.sum(dim=1).clamp(min=1.0)
        out["mean"] = adj / degree.unsqueeze(1)
    if "gin" in ops:
        out["sum"] = adj
    if "gat" in ops:
        out["mask"] = (adj + torch.eye(num_nodes)) > 0
    return out


class GCNLayer(nn.Module):
    needs = "gcn"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim)

    def forward(self, x, prop):
        return prop["gcn"] @ self.lin(x)


class SAGELayer(nn.Module):
    needs = "mean"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin_self = nn.Linear(in_dim, out_dim)
        self.lin_neigh = nn.Linear(in_dim, out_dim, bias=False)

    def forward(self, x, prop):
        return self.lin_self(x) + self.lin_neigh(prop["mean"] @ x)


class GATLayer(nn.Module):
    needs = "mask"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim, bias=False)
        self.att_src = nn.Linear(out_dim, 1, bias=False)
        self.att_dst = nn.Linear(out_dim, 1, bias=False)

    def forward(self, x, prop):
        h = self.lin(x)
        scores = F.leaky_relu(self.att_src(h) + self.att_dst(h).T, negative_slope=0.2)
        scores = scores.masked_fill(~prop["mask"], float("-inf"))
        return torch.softmax(scores, dim=1) @ h


class GINLayer(nn.Module):
    needs = "sum"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.eps = nn.Parameter(torch.zeros(1))
        self.mlp = nn.Sequential(nn.Linear(in_dim, out_dim), nn.ReLU(),
                                 nn.Linear(out_dim, out_dim))

    def forward(self, x, prop):
        return self.mlp((1.0 + self.eps) * x + prop["sum"] @ x)


class ChebLayer(nn.Module):
    needs = "cheb"

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin0 = nn.Linear(in_dim, out_dim)
        self.lin1 = nn.Linear(in_dim, out_dim, bias=False)

    def forward(self, x, prop):
        return self.lin0(x) + self.lin1(prop["cheb"] @ x)


class DenseLayer(nn.Module):
    needs = None

    def __init__(self, in_dim: int, out_dim: int):
        super().__init__()
        self.lin = nn.Linear(in_dim, out_dim)

    def forward(self, x, prop):
        return self.lin(x)


LAYER_TYPES = {"gcn": GCNLayer, "sage": SAGELayer, "gat": GATLayer,
               "gin": GINLayer, "cheb": ChebLayer, "linear": DenseLayer}

ACTIVATIONS = {"relu": F.relu, "elu": F.elu, "tanh": torch.tanh}


class GenotypeModel(nn.Module):
    """The architecture a genotype describes, plus a linear classifier."""

    def __init__(self, genotype: Genotype, in_dim: int, num_classes: int):
        super().__init__()
        self.genotype = genotype
        self.act = ACTIVATIONS[genotype.activation]
        self.dropout = genotype.dropout
        # block output widths; block 0 is the raw input
        widths = [in_dim] + [genotype.hidden_dim] * len(genotype.layers)
        self.skips_into = {t: sorted(f for f, t2 in genotype.skips if t2 == t)
                           for t in range(1, len(genotype.layers) + 1)}
        layers = []
        for t, op in enumerate(genotype.layers, start=1):
            in_width = widths[t - 1] + sum(widths[f] for f in self.skips_into[t])
            layers.append(LAYER_TYPES[op](in_width, genotype.hidden_dim))
        self.layers = nn.ModuleList(layers)
        self.classifier = nn.Linear(genotype.hidden_dim, num_classes)

    def forward(self, x: torch.Tensor, prop: dict[str, torch.Tensor],
                node_graph: torch.Tensor | None = None,
                num_graphs: int | None = None) -> torch.Tensor:
        outs = [x]
        for t, layer in enumerate(self.layers, start=1):
            pieces = [outs[t - 1]] + [outs[f] for f in self.skips_into[t]]
            h = layer(torch.cat(pieces, dim=1) if len(pieces) > 1 else pieces[0], prop)
            h = self.act(h)
            h = F.dropout(h, p=self.dropout, training=self.training)
            outs.append(h)
        h = outs[-1]
        if self.genotype.pooling != "none":
            h = pool_nodes(h, node_graph, num_graphs, self.genotype.pooling)
        return self.classifier(h)


def pool_nodes(h: torch.Tensor, node_graph: torch.Tensor, num_graphs: int,
               mode: str) -> torch.Tensor:
    if mode == "sum" or mode == "mean":
        pooled = torch.zeros(num_graphs, h.shape[1], dtype=h.dtype)
        pooled.index_add_(0, node_graph, h)
        if mode == "mean":
            counts = torch.zeros(num_graphs, dtype=h.dtype)
            counts.index_add_(0, node_graph, torch.ones(h.shape[0], dtype=h.dtype))
            pooled = pooled / counts.clamp(min=1.0).unsqueeze(1)
        return pooled
    if mode == "max":
        pooled = torch.full((num_graphs, h.shape[1]), float("-inf"), dtype=h.dtype)
        index = node_graph.unsqueeze(1).expand_as(h)
        return pooled.scatter_reduce(0, index, h, reduce="amax", include_self=True)
    raise ValueError(f"unknown pooling {mode!r}")

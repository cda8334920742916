"""Deterministic synthetic stand-in for the Cora citation network.

The real Planetoid download is not reachable from this environment, so
"cora" resolves to a generated graph with the same shape: 2708 nodes,
1433 binary bag-of-words features, 7 classes, ~81% same-label edges, and
the standard 140/500/1000 split sizes. Features carry a noisy per-class
topic signal and edges carry homophily, so a correct GCN has to use both
to clear the sanity threshold; the generator is seeded and stable.
"""

from __future__ import annotations

import numpy as np
import torch

from .data import NodeData

NUM_NODES = 2708
NUM_FEATURES = 1433
NUM_CLASSES = 7
NUM_EDGES = 5400
INTRA_FRACTION = 0.81
TOPIC_WORDS = 180          # vocabulary block reserved per class
OWN_TOPIC_WORDS = 5        # class-topic words activated per node
NOISE_WORDS = 13           # additional words drawn from the full vocabulary
SEED = 7777


def synthetic_cora() -> NodeData:
    rng = np.random.RandomState(SEED)
    sizes = [387] * 6 + [386]
    labels = np.concatenate([np.full(size, c, dtype=np.int64)
                             for c, size in enumerate(sizes)])
    rng.shuffle(labels)

    x = np.zeros((NUM_NODES, NUM_FEATURES), dtype=np.float32)
    for node in range(NUM_NODES):
        topic_base = int(labels[node]) * TOPIC_WORDS
        own = rng.choice(TOPIC_WORDS, size=OWN_TOPIC_WORDS, replace=False) + topic_base
        noise = rng.choice(NUM_FEATURES, size=NOISE_WORDS, replace=False)
        x[node, own] = 1.0
        x[node, noise] = 1.0

    members = [np.where(labels == c)[0] for c in range(NUM_CLASSES)]
    edges: set[tuple[int, int]] = set()
    intra_target = int(NUM_EDGES * INTRA_FRACTION)
    while len(edges) < intra_target:
        c = rng.randint(NUM_CLASSES)
        a, b = rng.choice(members[c], size=2, replace=False)
        edges.add((min(int(a), int(b)), max(int(a), int(b))))
    while len(edges) < NUM_EDGES:
        c1, c2 = rng.choice(NUM_CLASSES, size=2, replace=False)
        a = int(rng.choice(members[c1]))
        b = int(rng.choice(members[c2]))
        edges.add((min(a, b), max(a, b)))

    train_mask = np.zeros(NUM_NODES, dtype=bool)
    for c in range(NUM_CLASSES):
        train_mask[rng.choice(members[c], size=20, replace=False)] = True
    remaining = np.where(~train_mask)[0]
    rng.shuffle(remaining)
    val_mask = np.zeros(NUM_NODES, dtype=bool)
    test_mask = np.zeros(NUM_NODES, dtype=bool)
    val_mask[remaining[:500]] = True
    test_mask[remaining[500:1500]] = True

    return NodeData(
        x=torch.from_numpy(x),
        y=torch.from_numpy(labels),
        edges=torch.tensor(sorted(edges), dtype=torch.int64),
        train_mask=torch.from_numpy(train_mask),
        val_mask=torch.from_numpy(val_mask),
        test_mask=torch.from_numpy(test_mask),
        num_classes=NUM_CLASSES)

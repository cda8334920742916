#!/usr/bin/env python3
"""Regenerate the synthetic dataset fixtures under datasets/.

The fixtures are deterministic (seeded portable RNG) and engineered so the
edge-label agreement matches the frozen registry profiles exactly:
toy-cora 324/400 = 0.81, toy-actor 88/400 = 0.22, toy-mol 91/260 = 0.35.
Run from the repository root: python3 scripts/gen_toy_datasets.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from archon.rng import SplitMix64  # noqa: E402

ROOT = Path(__file__).resolve().parents[1] / "datasets"


def _features(rng: SplitMix64, dim: int, hot: int) -> str:
    # class signal comparable to the noise floor: learnable, not saturated
    values = [rng.random() for _ in range(dim)]
    values[hot % dim] += 0.7
    return ",".join(f"{v:.4f}" for v in values)


def gen_node_dataset(name: str, classes: int, per_class: int, dim: int,
                     intra_edges: int, inter_edges: int,
                     split_per_class: tuple[int, int, int], seed: int) -> None:
    rng = SplitMix64(seed)
    out = ROOT / name
    out.mkdir(parents=True, exist_ok=True)
    n = classes * per_class
    labels = {f"n{i:03d}": i // per_class for i in range(n)}
    node_ids = sorted(labels)

    with open(out / "nodes.tsv", "w", encoding="utf-8") as fh:
        for node_id in node_ids:
            fh.write(f"{node_id}\t{labels[node_id]}\t{_features(rng, dim, labels[node_id])}\n")

    edges: set[tuple[str, str]] = set()

    def add_edge(a: str, b: str) -> bool:
        if a == b:
            return False
        pair = (a, b) if a < b else (b, a)
        if pair in edges:
            return False
        edges.add(pair)
        return True

    members = [[f"n{c * per_class + j:03d}" for j in range(per_class)] for c in range(classes)]
    added = 0
    while added < intra_edges:
        c = rng.randrange(classes)
        if add_edge(rng.choice(members[c]), rng.choice(members[c])):
            added += 1
    added = 0
    while added < inter_edges:
        c1 = rng.randrange(classes)
        c2 = rng.randrange(classes)
        if c1 == c2:
            continue
        if add_edge(rng.choice(members[c1]), rng.choice(members[c2])):
            added += 1

    with open(out / "edges.tsv", "w", encoding="utf-8") as fh:
        for a, b in sorted(edges):
            fh.write(f"{a}\t{b}\n")

    train_n, val_n, _ = split_per_class
    splits = {"train": [], "val": [], "test": []}
    for c in range(classes):
        splits["train"].extend(members[c][:train_n])
        splits["val"].extend(members[c][train_n:train_n + val_n])
        splits["test"].extend(members[c][train_n + val_n:])
    for split, ids in splits.items():
        (out / f"{split}.txt").write_text("\n".join(sorted(ids)) + "\n", encoding="utf-8")


def gen_mol_dataset(name: str, seed: int) -> None:
    """30 ring graphs of 8 atoms; label patterns give exactly 91 of 260
    same-atom-type edges (29 rings with 3 agreeing edges, one with 4,
    all 20 chords disagreeing)."""
    rng = SplitMix64(seed)
    out = ROOT / name
    out.mkdir(parents=True, exist_ok=True)
    pattern3 = [0, 0, 0, 1, 1, 2, 3, 2]  # 3 agreeing ring edges
    pattern4 = [0, 0, 1, 1, 2, 2, 3, 3]  # 4 agreeing ring edges

    node_rows = []
    edge_rows = []
    graph_rows = []
    for gi in range(30):
        gid = f"g{gi:02d}"
        graph_label = gi % 2
        graph_rows.append(f"{gid}\t{graph_label}")
        pattern = pattern4 if gi == 29 else pattern3
        for ni, atom in enumerate(pattern):
            node_id = f"{gid}n{ni}"
            values = [rng.random() * 0.3 for _ in range(8)]
            values[atom] += 1.0
            values[4 + graph_label] += 1.0
            feats = ",".join(f"{v:.4f}" for v in values)
            node_rows.append(f"{node_id}\t{gid}\t{atom}\t{feats}")
        for ni in range(8):
            edge_rows.append(f"{gid}n{ni}\t{gid}n{(ni + 1) % 8}")
        if gi < 20:
            edge_rows.append(f"{gid}n0\t{gid}n4")  # chord, always cross-type

    (out / "nodes.tsv").write_text("\n".join(node_rows) + "\n", encoding="utf-8")
    (out / "edges.tsv").write_text("\n".join(edge_rows) + "\n", encoding="utf-8")
    (out / "graphs.tsv").write_text("\n".join(graph_rows) + "\n", encoding="utf-8")
    gids = [f"g{gi:02d}" for gi in range(30)]
    (out / "train.txt").write_text("\n".join(gids[:18]) + "\n", encoding="utf-8")
    (out / "val.txt").write_text("\n".join(gids[18:24]) + "\n", encoding="utf-8")
    (out / "test.txt").write_text("\n".join(gids[24:]) + "\n", encoding="utf-8")


def main() -> None:
    gen_node_dataset("toy-cora", classes=7, per_class=20, dim=16,
                     intra_edges=324, inter_edges=76,
                     split_per_class=(6, 4, 10), seed=101)
    gen_node_dataset("toy-actor", classes=5, per_class=24, dim=12,
                     intra_edges=88, inter_edges=312,
                     split_per_class=(8, 6, 10), seed=202)
    gen_mol_dataset("toy-mol", seed=303)
    manifest = {
        "version": "archon-datasets v1",
        "datasets": [
            {"name": "toy-cora", "kind": "homophilous-node", "dir": "toy-cora"},
            {"name": "toy-actor", "kind": "heterophilous-node", "dir": "toy-actor"},
            {"name": "toy-mol", "kind": "graph-molecule", "dir": "toy-mol"},
        ],
    }
    (ROOT / "registry.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                        encoding="utf-8")
    print(f"wrote fixtures under {ROOT}")


if __name__ == "__main__":
    main()

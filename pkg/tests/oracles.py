"""Independent brute-force oracles used to cross-check retrieval.

Deliberately reimplements embedding, cosine, and ranking from their
written definitions instead of importing the production code paths, so
oracle agreement is evidence, not tautology. The only shared convention
is the arithmetic order (left-to-right accumulation, dot / (sqrt * sqrt)),
which both sides document.
"""

from __future__ import annotations

import math


def oracle_embed(text: str) -> list[float]:
    """hash-v1 by its definition: 16 dims, byte-sum mod 16, L2 norm."""
    vec = [0.0] * 16
    for token in text.lower().split():
        index = sum(token.encode("utf-8")) % 16
        vec[index] = vec[index] + 1.0
    norm_sq = 0.0
    for component in vec:
        norm_sq += component * component
    if norm_sq == 0.0:
        return vec
    norm = math.sqrt(norm_sq)
    return [component / norm for component in vec]


def oracle_cosine(a: list[float], b: list[float]) -> float:
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (math.sqrt(na) * math.sqrt(nb))


def oracle_retrieve(items: list[tuple[str, str, list[float]]], query_vec: list[float],
                    stage_weights: dict[str, float], per_type_k: int,
                    final_k: int) -> list[tuple[str, float, float]]:
    """Full pipeline oracle over (item_id, resource_type, embedding) items.

    Returns [(item_id, cosine, final_score)] exactly as retrieve must:
    per-resource-type top per_type_k by (cosine desc, item_id asc), then
    weighted re-scoring, then top final_k by (final desc, item_id asc).
    """
    groups: dict[str, list[tuple[str, float]]] = {}
    for item_id, resource_type, embedding in items:
        score = oracle_cosine(query_vec, embedding)
        groups.setdefault(resource_type, []).append((item_id, score))
    survivors: list[tuple[str, str, float]] = []
    for resource_type, group in groups.items():
        group.sort(key=lambda pair: (-pair[1], pair[0]))
        for item_id, score in group[:per_type_k]:
            survivors.append((item_id, resource_type, score))
    weighted = [(item_id, score, score * stage_weights.get(resource_type, 1.0))
                for item_id, resource_type, score in survivors]
    weighted.sort(key=lambda row: (-row[2], row[0]))
    return weighted[:final_k]

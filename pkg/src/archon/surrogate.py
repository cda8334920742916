"""Deterministic analytic fitness surrogate.

Stands in for GPU training at desk scale. The score is an additive
formula over exact decimal table values, computed in rational arithmetic
and converted to float once at the end, so identical inputs give
bit-identical results on every platform:

    fitness = clamp01( base(kind)
                       + mean over layers of op_bonus(kind, op)
                       + 0.03 * [skips non-empty]
                       + 0.02 * [hidden_dim == preferred(kind)]
                       - 0.05 * |dropout - 0.5|
                       - 0.02 * max(0, L - 4)
                       + 0.01 * [lr == 0.005]
                       + feature_term            (sum of +-0.01, capped to +-0.02)
                       + noise )

    noise = ((fnv1a64(encoding [+ "|seed=N"]) mod 1001) / 1000 - 0.5) * noise_scale

The noise term is hash-mixed rather than RNG-drawn so per-seed draws are
independent of evaluation order.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .datasets import GraphProfile, KIND_FEATURE_EFFECTS, TASK_FOR_KIND
from .errors import EvalError
from .genotype import ArchGenotype, default_space, encode, validate
from .hashing import fnv1a64

F = Fraction

BASE_SCORE = {
    "homophilous-node": F(70, 100),
    "heterophilous-node": F(30, 100),
    "graph-molecule": F(60, 100),
    "ranking": F(50, 100),
}

OP_BONUS = {
    "homophilous-node": {"gcn": F(4, 100), "gat": F(5, 100), "sage": F(3, 100),
                         "gin": F(1, 100), "cheb": F(2, 100), "linear": F(-2, 100)},
    "heterophilous-node": {"sage": F(5, 100), "cheb": F(3, 100), "gat": F(2, 100),
                           "gin": F(2, 100), "gcn": F(0, 100), "linear": F(1, 100)},
    "graph-molecule": {"gin": F(5, 100), "gat": F(3, 100), "gcn": F(2, 100),
                       "sage": F(2, 100), "cheb": F(1, 100), "linear": F(-2, 100)},
    # The op table for ranking is neutral: no kind-specific operator edge.
    "ranking": {"gcn": F(0), "sage": F(0), "gat": F(0), "gin": F(0),
                "cheb": F(0), "linear": F(0)},
}

PREFERRED_DIM = {
    "homophilous-node": 64,
    "heterophilous-node": 128,
    "graph-molecule": 64,
    "ranking": 64,
}

SKIP_BONUS = F(3, 100)
DIM_BONUS = F(2, 100)
DROPOUT_WEIGHT = F(5, 100)
DEPTH_PENALTY = F(2, 100)
LR_BONUS = F(1, 100)
FEATURE_STEP = F(1, 100)
FEATURE_CAP = F(2, 100)
MISSING_POOLING_PENALTY = F(10, 100)


def surrogate_fitness(g: ArchGenotype, profile: GraphProfile,
                      feature_plan: Iterable[str] = (), noise_scale: float = 0.0,
                      seed: int | None = None) -> float:
    """Score a genotype for a graph profile; raises EvalError when the
    genotype is invalid for the profile's task type."""
    task = TASK_FOR_KIND[profile.kind]
    violations = validate(g, task, default_space(task))
    if violations:
        raise EvalError("invalid genotype for task: " + "; ".join(violations),
                        reason="invalid")

    kind = profile.kind
    bonuses = OP_BONUS[kind]
    total = BASE_SCORE[kind]
    total += sum((bonuses[op] for op in g.layers), F(0)) / len(g.layers)
    if g.skips:
        total += SKIP_BONUS
    if g.hidden_dim == PREFERRED_DIM[kind]:
        total += DIM_BONUS
    # dropout sits on the 0.05 grid; recover the exact rational via its index
    drop = F(round(g.dropout * 20), 20)
    total -= DROPOUT_WEIGHT * abs(drop - F(1, 2))
    total -= DEPTH_PENALTY * max(0, len(g.layers) - 4)
    if g.lr == 0.005:
        total += LR_BONUS
    if kind == "graph-molecule" and g.pooling == "none":
        total -= MISSING_POOLING_PENALTY

    effects = KIND_FEATURE_EFFECTS[kind]
    feature_term = F(0)
    for directive in feature_plan:
        if directive in effects["helpful"]:
            feature_term += FEATURE_STEP
        elif directive in effects["harmful"]:
            feature_term -= FEATURE_STEP
    feature_term = max(-FEATURE_CAP, min(FEATURE_CAP, feature_term))
    total += feature_term

    if noise_scale:
        blob = encode(g) if seed is None else f"{encode(g)}|seed={seed}"
        total += (F(fnv1a64(blob) % 1001, 1000) - F(1, 2)) * F(noise_scale)

    return float(min(max(total, F(0)), F(1)))

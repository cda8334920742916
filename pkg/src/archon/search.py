"""Knowledge-seeded evolutionary search over the genotype space.

evolve() is a pure function of (space, evaluator, budget, seeds, rng
seed): populations are recorded and evaluated in canonical-encoding
order, all tie-breaks are by ascending encoding, and every random draw
comes from the injected portable RNG, so identical inputs give identical
traces on any platform.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import ValidationError
from .genotype import (ArchGenotype, SearchSpace, crossover, encode, mutate,
                       sample, validate)
from .rng import SplitMix64

ELITE_FRACTION = 0.1
TOURNAMENT_SIZE = 2
CROSSOVER_PROB = 0.7
MUTATION_PROB = 0.9

_SKIP_WORDS = {"skip", "skips", "residual", "connection", "connections"}
_TOKEN_RE = re.compile(r"[a-z]+|[0-9]+")


@dataclass(frozen=True)
class EvolveBudget:
    population: int
    generations: int

    def __post_init__(self):
        if self.population < 2:
            raise ValidationError("population must be >= 2")
        if self.generations < 1:
            raise ValidationError("generations must be >= 1")


@dataclass
class SearchTrace:
    """Everything a search run produced, in replayable form."""

    generations: list[list[tuple[str, float]]] = field(default_factory=list)
    best_per_generation: list[tuple[str, float]] = field(default_factory=list)
    evals_used: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def best(self) -> tuple[str, float]:
        return self.best_per_generation[-1]

    def to_dict(self) -> dict:
        return {
            "generations": [[[enc, score] for enc, score in gen] for gen in self.generations],
            "best_per_generation": [[enc, score] for enc, score in self.best_per_generation],
            "evals_used": self.evals_used,
            "failures": [[enc, msg] for enc, msg in self.failures],
        }


def seed_from_knowledge(facets: Iterable[tuple[str, str]],
                        space: SearchSpace) -> list[ArchGenotype]:
    """Turn architecture-design facets into starting genotypes.

    Recognized keywords: op names (kept when the space allows them), the
    skip vocabulary (skip/residual/connection -> one skip if allowed), and
    dimension tokens matching allowed hidden dims. Facets with no
    recognized, allowed keyword contribute nothing; facets of other types
    are ignored outright.
    """
    seeds: list[ArchGenotype] = []
    seen: set[str] = set()
    for facet_type, text in facets:
        if facet_type != "architecture-design":
            continue
        tokens = _TOKEN_RE.findall(text.lower())
        mentioned_ops: list[str] = []
        for token in tokens:
            if token in space.allowed_ops and token not in mentioned_ops:
                mentioned_ops.append(token)
        wants_skip = space.allow_skips and any(t in _SKIP_WORDS for t in tokens)
        mentioned_dim: int | None = None
        for token in tokens:
            if token.isdigit() and int(token) in space.allowed_dims:
                mentioned_dim = int(token)
                break
        if not mentioned_ops and not wants_skip and mentioned_dim is None:
            continue

        num_layers = min(max(2, len(mentioned_ops)), space.max_layers)
        if mentioned_ops:
            layers = tuple(mentioned_ops[i % len(mentioned_ops)] for i in range(num_layers))
        else:
            layers = (space.allowed_ops[0],) * num_layers
        dim = mentioned_dim if mentioned_dim is not None else (
            64 if 64 in space.allowed_dims else space.allowed_dims[0])
        act = "relu" if "relu" in space.allowed_activations else space.allowed_activations[0]
        drop = 0.5 if 0.5 in space.allowed_dropouts else space.allowed_dropouts[0]
        skips = frozenset({(0, num_layers)}) if wants_skip else frozenset()
        lr = 0.005 if 0.005 in space.allowed_lrs else space.allowed_lrs[0]
        wd = 0.0005 if 0.0005 in space.allowed_wds else space.allowed_wds[0]
        ep = 200 if 200 in space.allowed_epochs else space.allowed_epochs[0]
        g = ArchGenotype(layers, dim, act, drop, skips, space.poolings[0], lr, wd, ep)
        if validate(g, space.task_type, space):
            continue
        enc = encode(g)
        if enc not in seen:
            seen.add(enc)
            seeds.append(g)
    return seeds


def _score_all(pop: Sequence[ArchGenotype], evaluator, cache: dict[str, float],
               failures: list[tuple[str, str]]) -> list[tuple[str, ArchGenotype, float]]:
    """Evaluate a population in canonical-encoding order with caching."""
    records = sorted(((encode(g), g) for g in pop), key=lambda t: t[0])
    out = []
    for enc, g in records:
        if enc not in cache:
            try:
                cache[enc] = float(evaluator(g))
            except Exception as exc:  # noqa: BLE001 - failures score 0, search continues
                cache[enc] = 0.0
                failures.append((enc, str(exc)))
        out.append((enc, g, cache[enc]))
    return out


def _tournament(scored: list[tuple[str, ArchGenotype, float]], rng: SplitMix64) -> ArchGenotype:
    a = scored[rng.randrange(len(scored))]
    b = scored[rng.randrange(len(scored))]
    return a[1] if (-a[2], a[0]) <= (-b[2], b[0]) else b[1]


def evolve(space: SearchSpace, evaluator: Callable[[ArchGenotype], float],
           budget: EvolveBudget, seeds: Sequence[ArchGenotype], rng: SplitMix64,
           on_generation: Callable[[int, str, float], None] | None = None) -> SearchTrace:
    """Elitist evolutionary search.

    Generation 0 is the deduplicated seed list padded with samples; each
    later generation keeps the top ceil(P/10) (at least one) elite and
    fills the rest with tournament-of-2 parents recombined with
    probability 0.7 and mutated with probability 0.9. Scores are cached
    by canonical encoding, so repeat genotypes never re-evaluate;
    evals_used counts the full population-slot budget P*G.
    """
    P, G = budget.population, budget.generations
    cache: dict[str, float] = {}
    trace = SearchTrace()

    pop: list[ArchGenotype] = []
    seen: set[str] = set()
    for g in seeds:
        enc = encode(g)
        if enc not in seen:
            seen.add(enc)
            pop.append(g)
        if len(pop) == P:
            break
    while len(pop) < P:
        pop.append(sample(space, rng))

    best_so_far: tuple[str, float] | None = None
    for gen_index in range(G):
        if gen_index > 0:
            elite_n = max(1, math.ceil(P * ELITE_FRACTION))
            ranked = sorted(scored, key=lambda t: (-t[2], t[0]))
            children = [t[1] for t in ranked[:elite_n]]
            while len(children) < P:
                parent = _tournament(scored, rng)
                if rng.coin(CROSSOVER_PROB):
                    child = crossover(parent, _tournament(scored, rng), rng)
                else:
                    child = parent
                if rng.coin(MUTATION_PROB):
                    child, _ = mutate(child, space, rng)
                children.append(child)
            pop = children
        scored = _score_all(pop, evaluator, cache, trace.failures)
        trace.generations.append([(enc, score) for enc, _, score in scored])
        gen_best = max(scored, key=lambda t: t[2])  # first max = lowest encoding on ties
        if best_so_far is None or gen_best[2] > best_so_far[1]:
            best_so_far = (gen_best[0], gen_best[2])
        trace.best_per_generation.append(best_so_far)
        if on_generation is not None:
            on_generation(gen_index, best_so_far[0], best_so_far[1])
    trace.evals_used = P * G
    return trace


def random_search(space: SearchSpace, evaluator: Callable[[ArchGenotype], float],
                  samples: int, rng: SplitMix64,
                  on_generation: Callable[[int, str, float], None] | None = None) -> SearchTrace:
    """Baseline: one generation of uniform samples under the same budget accounting."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    trace = SearchTrace()
    cache: dict[str, float] = {}
    pop = [sample(space, rng) for _ in range(samples)]
    scored = _score_all(pop, evaluator, cache, trace.failures)
    trace.generations.append([(enc, score) for enc, _, score in scored])
    gen_best = max(scored, key=lambda t: t[2])
    trace.best_per_generation.append((gen_best[0], gen_best[2]))
    trace.evals_used = samples
    if on_generation is not None:
        on_generation(0, gen_best[0], gen_best[2])
    return trace

"""GNN design space: genotypes, validation, canonical codec, genetic operators.

Canonical genotype string format (version ``v1``), an external contract::

    v1;ops=gcn,gcn;dim=64;act=relu;drop=0.50;skips=0-2;pool=none;lr=0.005;wd=0.0005;ep=200

Segment order is fixed (ops, dim, act, drop, skips, pool, lr, wd, ep).
``drop`` always carries exactly two fractional digits. ``skips`` is a
comma-separated list of ``from-to`` pairs sorted ascending; the segment is
present but empty when there are no skips. ``decode`` accepts only
canonical strings, so ``encode(decode(s)) == s`` for every canonical s.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import CodecError, ValidationError
from .rng import SplitMix64

OPS = ("gcn", "sage", "gat", "gin", "cheb", "linear")
HIDDEN_DIMS = (16, 32, 64, 128, 256)
ACTIVATIONS = ("relu", "elu", "tanh")
DROPOUTS = tuple(i / 20 for i in range(21))  # 0.00, 0.05, ..., 1.00
POOLINGS = ("none", "mean", "max", "sum")
LEARNING_RATES = (0.01, 0.005, 0.001)
WEIGHT_DECAYS = (0.0, 0.0005, 0.001)
EPOCH_CHOICES = (100, 200, 300)
MAX_LAYERS = 6

TASK_TYPES = ("node-classification", "graph-classification", "link-ranking")

# Canonical string forms of the float-valued genes; decode only accepts these.
_LR_STR = {0.01: "0.01", 0.005: "0.005", 0.001: "0.001"}
_WD_STR = {0.0: "0", 0.0005: "0.0005", 0.001: "0.001"}
_DROP_STR = {v: f"{v:.2f}" for v in DROPOUTS}

_SKIP_RE = re.compile(r"^(\d+)-(\d+)$")


@dataclass(frozen=True)
class ArchGenotype:
    """A complete architecture plus its training hyperparameters."""

    layers: tuple[str, ...]
    hidden_dim: int
    activation: str
    dropout: float
    skips: frozenset[tuple[int, int]]
    pooling: str
    lr: float
    weight_decay: float
    epochs: int


@dataclass(frozen=True)
class SearchSpace:
    """Allowed gene values. Every sampled genotype validates against it.

    The trailing alphabets default to the full gene alphabets; narrowing
    them (down to singletons) is how degenerate spaces are expressed.
    """

    allowed_ops: tuple[str, ...]
    max_layers: int
    allowed_dims: tuple[int, ...]
    allow_skips: bool
    task_type: str
    allowed_activations: tuple[str, ...] = ACTIVATIONS
    allowed_dropouts: tuple[float, ...] = DROPOUTS
    allowed_lrs: tuple[float, ...] = LEARNING_RATES
    allowed_wds: tuple[float, ...] = WEIGHT_DECAYS
    allowed_epochs: tuple[int, ...] = EPOCH_CHOICES

    def __post_init__(self):
        if not self.allowed_ops or any(op not in OPS for op in self.allowed_ops):
            raise ValidationError(f"allowed_ops must be a non-empty subset of {OPS}")
        if not 1 <= self.max_layers <= MAX_LAYERS:
            raise ValidationError(f"max_layers must be in 1..{MAX_LAYERS}")
        if not self.allowed_dims or any(d not in HIDDEN_DIMS for d in self.allowed_dims):
            raise ValidationError(f"allowed_dims must be a non-empty subset of {HIDDEN_DIMS}")
        if self.task_type not in TASK_TYPES:
            raise ValidationError(f"task_type must be one of {TASK_TYPES}")
        for name, values, alphabet in (
            ("allowed_activations", self.allowed_activations, ACTIVATIONS),
            ("allowed_dropouts", self.allowed_dropouts, DROPOUTS),
            ("allowed_lrs", self.allowed_lrs, LEARNING_RATES),
            ("allowed_wds", self.allowed_wds, WEIGHT_DECAYS),
            ("allowed_epochs", self.allowed_epochs, EPOCH_CHOICES),
        ):
            if not values or any(v not in alphabet for v in values):
                raise ValidationError(f"{name} must be a non-empty subset of {alphabet}")

    @property
    def poolings(self) -> tuple[str, ...]:
        if self.task_type == "graph-classification":
            return ("mean", "max", "sum")
        return ("none",)


def default_space(task_type: str) -> SearchSpace:
    return SearchSpace(
        allowed_ops=OPS,
        max_layers=MAX_LAYERS,
        allowed_dims=HIDDEN_DIMS,
        allow_skips=True,
        task_type=task_type,
    )


def validate(g: ArchGenotype, task_type: str, space: SearchSpace) -> list[str]:
    """Return the list of space/task violations; empty means valid."""
    violations: list[str] = []
    L = len(g.layers)
    if L < 1:
        violations.append("genotype has no layers")
    if L > space.max_layers:
        violations.append(f"{L} layers exceeds max_layers {space.max_layers}")
    for i, op in enumerate(g.layers):
        if op not in space.allowed_ops:
            violations.append(f"layer {i + 1} op '{op}' not in allowed ops")
    if g.hidden_dim not in space.allowed_dims:
        violations.append(f"hidden_dim {g.hidden_dim} not in allowed dims")
    if g.activation not in space.allowed_activations:
        violations.append(f"activation '{g.activation}' not allowed")
    if g.dropout not in space.allowed_dropouts:
        violations.append(f"dropout {g.dropout} not allowed")
    if g.lr not in space.allowed_lrs:
        violations.append(f"lr {g.lr} not allowed")
    if g.weight_decay not in space.allowed_wds:
        violations.append(f"weight_decay {g.weight_decay} not allowed")
    if g.epochs not in space.allowed_epochs:
        violations.append(f"epochs {g.epochs} not allowed")
    if g.skips and not space.allow_skips:
        violations.append("skips present but space disallows skips")
    for f, t in sorted(g.skips):
        if not (0 <= f < t <= L):
            violations.append(f"skip {f}-{t} out of range for {L} layers")
    if task_type == "graph-classification":
        if g.pooling == "none":
            violations.append("graph-level task requires pooling")
    elif g.pooling != "none":
        violations.append(f"pooling '{g.pooling}' requires a graph-level task")
    if g.pooling not in POOLINGS:
        violations.append(f"unknown pooling '{g.pooling}'")
    return violations


# ---------------------------------------------------------------------------
# Canonical codec
# ---------------------------------------------------------------------------

_SEGMENT_KEYS = ("ops", "dim", "act", "drop", "skips", "pool", "lr", "wd", "ep")


def encode(g: ArchGenotype) -> str:
    """Render the canonical v1 string for a genotype."""
    try:
        drop = _DROP_STR[g.dropout]
    except KeyError:
        raise CodecError("drop", f"dropout {g.dropout!r} is not on the 0.05 grid")
    try:
        lr = _LR_STR[g.lr]
        wd = _WD_STR[g.weight_decay]
    except KeyError:
        raise CodecError("lr", f"lr/wd {g.lr!r}/{g.weight_decay!r} not in the gene alphabet")
    skips = ",".join(f"{f}-{t}" for f, t in sorted(g.skips))
    return (
        f"v1;ops={','.join(g.layers)};dim={g.hidden_dim};act={g.activation};"
        f"drop={drop};skips={skips};pool={g.pooling};lr={lr};wd={wd};ep={g.epochs}"
    )


def decode(s: str) -> ArchGenotype:
    """Parse a canonical v1 string; raises CodecError naming the bad segment."""
    parts = s.split(";")
    if not parts or parts[0] != "v1":
        raise CodecError("version", f"expected leading 'v1', got {parts[0]!r}")
    if len(parts) != 1 + len(_SEGMENT_KEYS):
        raise CodecError("format", f"expected {1 + len(_SEGMENT_KEYS)} segments, got {len(parts)}")
    values: dict[str, str] = {}
    for key, part in zip(_SEGMENT_KEYS, parts[1:]):
        prefix = key + "="
        if not part.startswith(prefix):
            raise CodecError(key, f"expected segment '{key}=...', got {part!r}")
        values[key] = part[len(prefix):]

    ops = tuple(values["ops"].split(",")) if values["ops"] else ()
    if not 1 <= len(ops) <= MAX_LAYERS:
        raise CodecError("ops", f"need 1..{MAX_LAYERS} layer ops, got {len(ops)}")
    for op in ops:
        if op not in OPS:
            raise CodecError("ops", f"unknown op {op!r}")

    try:
        dim = int(values["dim"])
    except ValueError:
        raise CodecError("dim", f"not an integer: {values['dim']!r}")
    if dim not in HIDDEN_DIMS:
        raise CodecError("dim", f"{dim} not in {HIDDEN_DIMS}")

    act = values["act"]
    if act not in ACTIVATIONS:
        raise CodecError("act", f"unknown activation {act!r}")

    drop_s = values["drop"]
    drop_lookup = {v: k for k, v in _DROP_STR.items()}
    if drop_s not in drop_lookup:
        raise CodecError("drop", f"{drop_s!r} is not a two-digit value on the 0.05 grid")
    drop = drop_lookup[drop_s]

    skips: set[tuple[int, int]] = set()
    if values["skips"]:
        prev: tuple[int, int] | None = None
        for token in values["skips"].split(","):
            m = _SKIP_RE.match(token)
            if not m:
                raise CodecError("skips", f"bad pair {token!r}")
            f, t = int(m.group(1)), int(m.group(2))
            if not (0 <= f < t <= len(ops)):
                raise CodecError("skips", f"pair {f}-{t} out of range for {len(ops)} layers")
            if prev is not None and (f, t) <= prev:
                raise CodecError("skips", "pairs must be strictly ascending")
            prev = (f, t)
            skips.add((f, t))

    pool = values["pool"]
    if pool not in POOLINGS:
        raise CodecError("pool", f"unknown pooling {pool!r}")

    lr_lookup = {v: k for k, v in _LR_STR.items()}
    if values["lr"] not in lr_lookup:
        raise CodecError("lr", f"{values['lr']!r} not one of {sorted(_LR_STR.values())}")
    wd_lookup = {v: k for k, v in _WD_STR.items()}
    if values["wd"] not in wd_lookup:
        raise CodecError("wd", f"{values['wd']!r} not one of {sorted(_WD_STR.values())}")
    if values["ep"] not in {str(e) for e in EPOCH_CHOICES}:
        raise CodecError("ep", f"{values['ep']!r} not one of {EPOCH_CHOICES}")

    return ArchGenotype(
        layers=ops,
        hidden_dim=dim,
        activation=act,
        dropout=drop,
        skips=frozenset(skips),
        pooling=pool,
        lr=lr_lookup[values["lr"]],
        weight_decay=wd_lookup[values["wd"]],
        epochs=int(values["ep"]),
    )


# ---------------------------------------------------------------------------
# Sampling and variation operators
# ---------------------------------------------------------------------------


def _eligible_skip_pairs(num_layers: int) -> list[tuple[int, int]]:
    return [(f, t) for f in range(num_layers) for t in range(f + 1, num_layers + 1)]


def sample(space: SearchSpace, rng: SplitMix64) -> ArchGenotype:
    """Draw a uniform genotype from the space.

    Draw order is fixed (layer count, ops, dim, act, drop, skip coin per
    eligible pair, pooling, lr, wd, ep) so traces replay across platforms.
    """
    num_layers = 1 + rng.randrange(space.max_layers)
    layers = tuple(rng.choice(space.allowed_ops) for _ in range(num_layers))
    dim = rng.choice(space.allowed_dims)
    act = rng.choice(space.allowed_activations)
    drop = rng.choice(space.allowed_dropouts)
    skips: set[tuple[int, int]] = set()
    if space.allow_skips:
        for pair in _eligible_skip_pairs(num_layers):
            if rng.coin(0.5):
                skips.add(pair)
    pooling = rng.choice(space.poolings)
    lr = rng.choice(space.allowed_lrs)
    wd = rng.choice(space.allowed_wds)
    ep = rng.choice(space.allowed_epochs)
    return ArchGenotype(layers, dim, act, drop, frozenset(skips), pooling, lr, wd, ep)


def _mutable_genes(g: ArchGenotype, space: SearchSpace) -> list[tuple]:
    genes: list[tuple] = []
    if len(space.allowed_ops) >= 2:
        genes.extend(("op", i) for i in range(len(g.layers)))
    if len(space.allowed_dims) >= 2:
        genes.append(("dim",))
    if len(space.allowed_activations) >= 2:
        genes.append(("act",))
    if len(space.allowed_dropouts) >= 2:
        genes.append(("drop",))
    if space.allow_skips:
        genes.extend(("skip", pair) for pair in _eligible_skip_pairs(len(g.layers)))
    if len(space.allowed_lrs) >= 2:
        genes.append(("lr",))
    if len(space.allowed_wds) >= 2:
        genes.append(("wd",))
    if len(space.allowed_epochs) >= 2:
        genes.append(("ep",))
    return genes


def mutate(g: ArchGenotype, space: SearchSpace, rng: SplitMix64) -> tuple[ArchGenotype, bool]:
    """Change exactly one gene, chosen uniformly among the mutable ones.

    Returns (genotype, changed). A space so tight that no gene can change
    (all singleton alphabets, skips disallowed) yields (g, False).
    Pooling and layer count are never mutated.
    """
    genes = _mutable_genes(g, space)
    if not genes:
        return g, False
    gene = genes[rng.randrange(len(genes))]

    def pick_other(domain, current):
        alternatives = [v for v in domain if v != current]
        return alternatives[rng.randrange(len(alternatives))]

    if gene[0] == "op":
        i = gene[1]
        layers = list(g.layers)
        layers[i] = pick_other(space.allowed_ops, layers[i])
        return ArchGenotype(tuple(layers), g.hidden_dim, g.activation, g.dropout,
                            g.skips, g.pooling, g.lr, g.weight_decay, g.epochs), True
    if gene[0] == "dim":
        return ArchGenotype(g.layers, pick_other(space.allowed_dims, g.hidden_dim),
                            g.activation, g.dropout, g.skips, g.pooling,
                            g.lr, g.weight_decay, g.epochs), True
    if gene[0] == "act":
        return ArchGenotype(g.layers, g.hidden_dim, pick_other(space.allowed_activations, g.activation),
                            g.dropout, g.skips, g.pooling, g.lr, g.weight_decay, g.epochs), True
    if gene[0] == "drop":
        return ArchGenotype(g.layers, g.hidden_dim, g.activation,
                            pick_other(space.allowed_dropouts, g.dropout),
                            g.skips, g.pooling, g.lr, g.weight_decay, g.epochs), True
    if gene[0] == "skip":
        pair = gene[1]
        skips = set(g.skips)
        if pair in skips:
            skips.remove(pair)
        else:
            skips.add(pair)
        return ArchGenotype(g.layers, g.hidden_dim, g.activation, g.dropout,
                            frozenset(skips), g.pooling, g.lr, g.weight_decay, g.epochs), True
    if gene[0] == "lr":
        return ArchGenotype(g.layers, g.hidden_dim, g.activation, g.dropout, g.skips,
                            g.pooling, pick_other(space.allowed_lrs, g.lr),
                            g.weight_decay, g.epochs), True
    if gene[0] == "wd":
        return ArchGenotype(g.layers, g.hidden_dim, g.activation, g.dropout, g.skips,
                            g.pooling, g.lr, pick_other(space.allowed_wds, g.weight_decay),
                            g.epochs), True
    return ArchGenotype(g.layers, g.hidden_dim, g.activation, g.dropout, g.skips,
                        g.pooling, g.lr, g.weight_decay,
                        pick_other(space.allowed_epochs, g.epochs)), True


def crossover(a: ArchGenotype, b: ArchGenotype, rng: SplitMix64) -> ArchGenotype:
    """Recombine two parents; every child gene comes from one of them.

    Layer lists recombine with a single-point cut at c in 0..min(La, Lb)
    (the child keeps b's length). Scalar genes are coin flips; the skip
    set is taken whole from one parent, falling back to b's when a's pairs
    do not fit the child's layer count.
    """
    cut = rng.randrange(min(len(a.layers), len(b.layers)) + 1)
    layers = a.layers[:cut] + b.layers[cut:]

    def flip(x, y):
        return x if rng.randrange(2) == 0 else y

    dim = flip(a.hidden_dim, b.hidden_dim)
    act = flip(a.activation, b.activation)
    drop = flip(a.dropout, b.dropout)
    pool = flip(a.pooling, b.pooling)
    lr = flip(a.lr, b.lr)
    wd = flip(a.weight_decay, b.weight_decay)
    ep = flip(a.epochs, b.epochs)
    skips = flip(a.skips, b.skips)
    if any(t > len(layers) for _, t in skips):
        skips = b.skips
    return ArchGenotype(layers, dim, act, drop, skips, pool, lr, wd, ep)

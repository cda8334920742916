"""Parser for the canonical genotype string format (version v1).

The format is an external contract of the search engine::

    v1;ops=gcn,gcn;dim=64;act=relu;drop=0.50;skips=0-2;pool=none;lr=0.005;wd=0.0005;ep=200

fixed segment order, two-digit dropout, `from-to` skip pairs sorted
ascending. The worker keeps its own parser so it depends only on the
documented format, not on the engine's code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

OPS = ("gcn", "sage", "gat", "gin", "cheb", "linear")
HIDDEN_DIMS = (16, 32, 64, 128, 256)
ACTIVATIONS = ("relu", "elu", "tanh")
POOLINGS = ("none", "mean", "max", "sum")
LRS = {"0.01": 0.01, "0.005": 0.005, "0.001": 0.001}
WDS = {"0": 0.0, "0.0005": 0.0005, "0.001": 0.001}
EPOCHS = ("100", "200", "300")

_SEGMENTS = ("ops", "dim", "act", "drop", "skips", "pool", "lr", "wd", "ep")
_DROP_RE = re.compile(r"^\d\.\d\d$")
_SKIP_RE = re.compile(r"^(\d+)-(\d+)$")


class CodecError(ValueError):
    def __init__(self, segment: str, message: str):
        super().__init__(f"CodecError: segment '{segment}': {message}")
        self.segment = segment


@dataclass(frozen=True)
class Genotype:
    layers: tuple[str, ...]
    hidden_dim: int
    activation: str
    dropout: float
    skips: tuple[tuple[int, int], ...]
    pooling: str
    lr: float
    weight_decay: float
    epochs: int


def parse_genotype(text: str) -> Genotype:
    parts = text.split(";")
    if not parts or parts[0] != "v1":
        raise CodecError("version", f"expected 'v1', got {parts[0]!r}")
    if len(parts) != 1 + len(_SEGMENTS):
        raise CodecError("format", f"expected {1 + len(_SEGMENTS)} segments")
    values = {}
    for key, part in zip(_SEGMENTS, parts[1:]):
        if not part.startswith(key + "="):
            raise CodecError(key, f"expected '{key}=...', got {part!r}")
        values[key] = part[len(key) + 1:]

    ops = tuple(values["ops"].split(",")) if values["ops"] else ()
    if not 1 <= len(ops) <= 6 or any(op not in OPS for op in ops):
        raise CodecError("ops", f"bad layer list {values['ops']!r}")
    try:
        dim = int(values["dim"])
    except ValueError:
        raise CodecError("dim", values["dim"])
    if dim not in HIDDEN_DIMS:
        raise CodecError("dim", str(dim))
    if values["act"] not in ACTIVATIONS:
        raise CodecError("act", values["act"])
    if not _DROP_RE.match(values["drop"]):
        raise CodecError("drop", values["drop"])
    drop = float(values["drop"])
    if round(drop * 20) / 20 != drop or not 0.0 <= drop <= 1.0:
        raise CodecError("drop", values["drop"])
    skips = []
    if values["skips"]:
        for token in values["skips"].split(","):
            m = _SKIP_RE.match(token)
            if not m:
                raise CodecError("skips", token)
            f, t = int(m.group(1)), int(m.group(2))
            if not (0 <= f < t <= len(ops)) or (skips and (f, t) <= skips[-1]):
                raise CodecError("skips", token)
            skips.append((f, t))
    if values["pool"] not in POOLINGS:
        raise CodecError("pool", values["pool"])
    if values["lr"] not in LRS:
        raise CodecError("lr", values["lr"])
    if values["wd"] not in WDS:
        raise CodecError("wd", values["wd"])
    if values["ep"] not in EPOCHS:
        raise CodecError("ep", values["ep"])
    return Genotype(ops, dim, values["act"], drop, tuple(skips), values["pool"],
                    LRS[values["lr"]], WDS[values["wd"]], int(values["ep"]))

"""Knowledge bases: ingestion, exact cosine retrieval, post-ranking, snapshots.

A KnowledgeStore instance is one knowledge base; the pipeline owns two
(prior and experiment). Retrieval is an exact scan: corpora are desk
scale, and exactness is what makes the brute-force oracle equality hold
bit for bit, tie-breaks included.

Snapshot format (external contract)::

    archon-kb v1 embedder=<name> dim=<d>
    ["item_id","doc_id","facet_type","resource_type","text",[c1,...,cd]]
    ...

one JSON-array record per item, fields in that fixed order, embedding
components printed with exactly 9 fractional digits. Embeddings are
quantized to that 9-digit grid when items are stored, which is what makes
save/load lossless and retrieval scores identical across round trips.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .clock import Clock
from .errors import (CompletionError, ConfigError, DuplicateError, IngestError,
                     LoadError, ValidationError)
from .gateway import (HashEmbedder, Transcript, complete, embed, make_envelope)
from .plans import ExperimentReport, report_text, validate_report
from .schemas import FACET_TYPES

RESOURCE_TYPES = ("paper", "docs", "leaderboard", "experiment-report")
STAGES = ("data-agent", "configuration-agent", "planning-review")

MAX_FACET_TEXT = 512
TRUNCATION_MARK = "…"
NORM_TOLERANCE = 1e-9

# Goal-aware post-ranking weights: stage x resource type.
DEFAULT_STAGE_WEIGHTS: dict[str, dict[str, float]] = {
    "data-agent": {"docs": 1.0, "paper": 0.9, "experiment-report": 0.8, "leaderboard": 0.6},
    "configuration-agent": {"paper": 1.0, "experiment-report": 1.0, "leaderboard": 0.9, "docs": 0.7},
    "planning-review": {"experiment-report": 1.0, "leaderboard": 0.8, "paper": 0.6, "docs": 0.4},
}


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    resource_type: str
    title: str
    body: str
    origin: str

    def __post_init__(self):
        if not self.doc_id:
            raise ValidationError("doc_id must be non-empty")
        if self.resource_type not in RESOURCE_TYPES:
            raise ValidationError(f"resource_type {self.resource_type!r} not in {RESOURCE_TYPES}")
        if not self.body.strip():
            raise ValidationError(f"document {self.doc_id} has an empty body")


@dataclass(frozen=True)
class CoarseSummary:
    doc_id: str
    problem: str
    approach: str
    summary: str


@dataclass(frozen=True)
class KnowledgeItem:
    item_id: str
    doc_id: str
    facet_type: str
    resource_type: str
    text: str
    embedding: tuple[float, ...]


@dataclass(frozen=True)
class RetrievalQuery:
    query_text: str
    stage: str
    per_type_k: int = 5
    final_k: int = 8

    def __post_init__(self):
        if self.per_type_k < 1 or self.final_k < 1:
            raise ValidationError("per_type_k and final_k must be >= 1")


@dataclass(frozen=True)
class RankedEntry:
    item_id: str
    cosine_score: float
    final_score: float


@dataclass(frozen=True)
class RankedKnowledge:
    entries: tuple[RankedEntry, ...]

    def item_ids(self) -> list[str]:
        return [e.item_id for e in self.entries]


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine similarity, defined as 0.0 when either vector is zero.

    Accumulation is left-to-right in index order and the result is
    dot / (sqrt(na) * sqrt(nb)); independent implementations must follow
    the same order to reproduce scores bit for bit.
    """
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


def quantize_unit(vec: Sequence[float]) -> tuple[float, ...]:
    """Snap a unit vector onto the 9-decimal grid, keeping the norm within 1e-9.

    Components are rounded to nanos; if rounding drifts the norm outside
    the tolerance, the largest-magnitude component is re-solved on the
    grid (ties to the lowest index) until the norm check passes. Zero
    vectors pass through unchanged.
    """
    if all(c == 0.0 for c in vec):
        return tuple(0.0 for _ in vec)
    nanos = [round(c * 1e9) for c in vec]
    for _ in range(64):
        vals = [n / 1e9 for n in nanos]
        s = 0.0
        for v in vals:
            s += v * v
        norm = math.sqrt(s)
        if abs(norm - 1.0) <= NORM_TOLERANCE:
            return tuple(vals)
        j = max(range(len(nanos)), key=lambda i: (abs(nanos[i]), -i))
        rest = s - vals[j] * vals[j]
        desired = math.sqrt(max(0.0, 1.0 - rest))
        new_mag = round(desired * 1e9)
        if new_mag == abs(nanos[j]):
            new_mag += 1 if norm < 1.0 else -1
        nanos[j] = new_mag if nanos[j] >= 0 else -new_mag
    raise ValidationError("embedding quantization did not converge")


def post_rank(candidates: Sequence[tuple[KnowledgeItem, float]], stage: str,
              final_k: int, weights: dict[str, dict[str, float]] | None = None) -> RankedKnowledge:
    """Re-score candidates with the stage's resource-type weights.

    final_score = cosine * weight(stage, resource_type); the top final_k
    survive, sorted descending by final_score with ties broken by
    ascending item_id.
    """
    table = weights if weights is not None else DEFAULT_STAGE_WEIGHTS
    if stage not in table:
        raise ConfigError(f"unknown retrieval stage {stage!r}")
    stage_weights = table[stage]
    scored = []
    for item, cos_score in candidates:
        weight = stage_weights.get(item.resource_type, 1.0)
        scored.append(RankedEntry(item.item_id, cos_score, cos_score * weight))
    scored.sort(key=lambda e: (-e.final_score, e.item_id))
    return RankedKnowledge(tuple(scored[:final_k]))


def _truncate_facet(text: str) -> str:
    if len(text) <= MAX_FACET_TEXT:
        return text
    return text[:MAX_FACET_TEXT - 1] + TRUNCATION_MARK


class KnowledgeStore:
    """One knowledge base: items, embedding index, provenance.

    Reads are safe concurrently; writes are serialized by a store-wide
    lock, and a retrieval overlapping a write sees either the full
    pre-write or full post-write item list.
    """

    def __init__(self, embedder=None,
                 weights: dict[str, dict[str, float]] | None = None):
        self.embedder = embedder if embedder is not None else HashEmbedder()
        self.weights = weights if weights is not None else DEFAULT_STAGE_WEIGHTS
        self._items: list[KnowledgeItem] = []
        self._by_id: dict[str, KnowledgeItem] = {}
        self._doc_ids: set[str] = set()
        self._summaries: dict[str, CoarseSummary] = {}
        self._write_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._items)

    @property
    def items(self) -> list[KnowledgeItem]:
        return list(self._items)

    def get(self, item_id: str) -> KnowledgeItem:
        return self._by_id[item_id]

    def summary_for(self, doc_id: str) -> CoarseSummary | None:
        return self._summaries.get(doc_id)

    # -- writes ------------------------------------------------------------

    def _add_items(self, items: list[KnowledgeItem]) -> None:
        for item in items:
            if item.item_id in self._by_id:
                raise DuplicateError(f"item id {item.item_id} already present")
            if item.text.strip():
                norm = math.sqrt(sum(c * c for c in item.embedding))
                if abs(norm - 1.0) > NORM_TOLERANCE:
                    raise ValidationError(
                        f"item {item.item_id}: embedding norm {norm!r} outside tolerance")
        new_list = self._items + items
        for item in items:
            self._by_id[item.item_id] = item
        self._items = new_list  # single reference swap: readers see old or new

    def ingest_document(self, doc: SourceDocument, provider,
                        transcript: Transcript | None = None,
                        clock: Clock | None = None) -> list[str]:
        """Two-level extraction: coarse summary, then fine-grained facets.

        Returns the new item ids in creation order. The coarse summary is
        kept as provenance only; facets are what the index serves.
        """
        with self._write_lock:
            if doc.doc_id in self._doc_ids:
                raise DuplicateError(f"document {doc.doc_id} already ingested")
            try:
                summary_resp = complete(
                    make_envelope("summarize-doc",
                                  {"doc_id": doc.doc_id, "title": doc.title, "body": doc.body}),
                    provider, transcript, clock)
                facet_resp = complete(
                    make_envelope("extract-facets",
                                  {"doc_id": doc.doc_id, "title": doc.title, "body": doc.body,
                                   "summary": summary_resp.payload["summary"]}),
                    provider, transcript, clock)
            except CompletionError as exc:
                raise IngestError(
                    f"extraction failed for {doc.doc_id}: {exc}", transcript) from exc

            facets = facet_resp.payload["facets"]
            texts = [_truncate_facet(f["text"]) for f in facets]
            vectors = embed(texts, self.embedder, transcript, clock)
            items = []
            for i, (facet, text, vec) in enumerate(zip(facets, texts, vectors), start=1):
                items.append(KnowledgeItem(
                    item_id=f"{doc.doc_id}#f{i:02d}",
                    doc_id=doc.doc_id,
                    facet_type=facet["facet_type"],
                    resource_type=doc.resource_type,
                    text=text,
                    embedding=quantize_unit(vec)))
            self._add_items(items)
            self._doc_ids.add(doc.doc_id)
            self._summaries[doc.doc_id] = CoarseSummary(
                doc.doc_id, summary_resp.payload["problem"],
                summary_resp.payload["approach"], summary_resp.payload["summary"])
            return [item.item_id for item in items]

    def upsert_experiment_report(self, report: ExperimentReport,
                                 transcript: Transcript | None = None,
                                 clock: Clock | None = None) -> str:
        """Serialize, embed, and store a run report as an evaluation-result item."""
        validate_report(report)
        with self._write_lock:
            text = _truncate_facet(report_text(report))
            vec = embed([text], self.embedder, transcript, clock)[0]
            n = len(self._items) + 1
            item_id = f"exp-{n:04d}"
            while item_id in self._by_id:
                n += 1
                item_id = f"exp-{n:04d}"
            item = KnowledgeItem(
                item_id=item_id,
                doc_id=report.run_id,
                facet_type="evaluation-result",
                resource_type="experiment-report",
                text=text,
                embedding=quantize_unit(vec))
            self._add_items([item])
            self._doc_ids.add(report.run_id)
            return item_id

    # -- reads -------------------------------------------------------------

    def retrieve(self, query: RetrievalQuery,
                 transcript: Transcript | None = None,
                 clock: Clock | None = None,
                 rerank_provider=None) -> RankedKnowledge:
        """Goal-aware retrieval: per-type top-k by cosine, then post-ranking.

        With rerank_provider set, the post-ranked list is additionally
        reordered by an LLM call (template rerank-knowledge); the result
        still never exceeds final_k.
        """
        query_vec = embed([query.query_text], self.embedder, transcript, clock)[0]
        items = self._items  # atomic reference read
        by_type: dict[str, list[tuple[KnowledgeItem, float]]] = {}
        for item in items:
            score = cosine(query_vec, item.embedding)
            by_type.setdefault(item.resource_type, []).append((item, score))
        candidates: list[tuple[KnowledgeItem, float]] = []
        for rtype in sorted(by_type):
            group = sorted(by_type[rtype], key=lambda pair: (-pair[1], pair[0].item_id))
            candidates.extend(group[:query.per_type_k])
        ranked = post_rank(candidates, query.stage, query.final_k, self.weights)
        if rerank_provider is not None and ranked.entries:
            ranked = self._llm_rerank(query, ranked, rerank_provider, transcript, clock)
        return ranked

    def _llm_rerank(self, query: RetrievalQuery, ranked: RankedKnowledge,
                    provider, transcript, clock) -> RankedKnowledge:
        injected = tuple((e.item_id, self._by_id[e.item_id].text) for e in ranked.entries)
        env = make_envelope(
            "rerank-knowledge",
            {"stage": query.stage, "query": query.query_text,
             "knowledge_count": str(len(injected))},
            injected)
        resp = complete(env, provider, transcript, clock)
        order = resp.payload["order"]
        return RankedKnowledge(tuple(ranked.entries[i] for i in order))

    # -- snapshots ----------------------------------------------------------

    def snapshot_save(self, path: str | Path) -> None:
        path = Path(path)
        dim = getattr(self.embedder, "dim", None)
        if dim is None:
            dim = len(self._items[0].embedding) if self._items else 0
        lines = [f"archon-kb v1 embedder={self.embedder.name} dim={dim}"]
        for item in self._items:
            head = json.dumps([item.item_id, item.doc_id, item.facet_type,
                               item.resource_type, item.text], ensure_ascii=False)
            emb = "[" + ",".join(f"{c:.9f}" for c in item.embedding) + "]"
            lines.append(head[:-1] + "," + emb + "]")
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def snapshot_load(cls, path: str | Path, embedder=None,
                      weights: dict[str, dict[str, float]] | None = None) -> "KnowledgeStore":
        path = Path(path)
        data = path.read_bytes()
        text = data.decode("utf-8", errors="replace")
        lines = text.split("\n")
        if not lines or not lines[0].startswith("archon-kb v1"):
            raise LoadError(f"{path}: missing 'archon-kb v1' header", byte_offset=0)
        header_fields = dict(
            part.split("=", 1) for part in lines[0].split()[2:] if "=" in part)
        embedder_name = header_fields.get("embedder", "hash-v1")
        if embedder is None:
            if embedder_name == HashEmbedder.name:
                embedder = HashEmbedder()
            else:
                raise ConfigError(
                    f"snapshot was built with embedder {embedder_name!r}; pass a matching embedder")
        store = cls(embedder=embedder, weights=weights)
        items: list[KnowledgeItem] = []
        offset = len((lines[0] + "\n").encode("utf-8"))
        for line in lines[1:]:
            line_bytes = len((line + "\n").encode("utf-8"))
            if not line.strip():
                offset += line_bytes
                continue
            try:
                record = json.loads(line)
                if (not isinstance(record, list) or len(record) != 6
                        or not all(isinstance(f, str) for f in record[:5])
                        or not isinstance(record[5], list)):
                    raise ValueError("record must be a 6-field array")
                item = KnowledgeItem(
                    item_id=record[0], doc_id=record[1], facet_type=record[2],
                    resource_type=record[3], text=record[4],
                    embedding=tuple(float(c) for c in record[5]))
                if item.resource_type not in RESOURCE_TYPES or item.facet_type not in FACET_TYPES:
                    raise ValueError("unknown resource or facet type")
                if item.text.strip():
                    norm = math.sqrt(sum(c * c for c in item.embedding))
                    if abs(norm - 1.0) > NORM_TOLERANCE:
                        raise ValueError(f"embedding norm {norm!r} outside tolerance")
            except (ValueError, json.JSONDecodeError) as exc:
                raise LoadError(f"{path}: corrupt record: {exc}", byte_offset=offset)
            items.append(item)
            offset += line_bytes
        store._add_items(items)
        store._doc_ids = {item.doc_id for item in items}
        return store


def read_manifest(manifest_path: str | Path) -> list[SourceDocument]:
    """Read an ingestion manifest: JSONL rows of (doc_id, resource_type,
    title, origin, file), with file paths relative to the manifest."""
    manifest_path = Path(manifest_path)
    docs: list[SourceDocument] = []
    for lineno, line in enumerate(
            manifest_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{manifest_path}:{lineno}: bad manifest row: {exc}")
        missing = [k for k in ("doc_id", "resource_type", "title", "origin", "file")
                   if k not in row]
        if missing:
            raise ConfigError(f"{manifest_path}:{lineno}: manifest row missing {missing}")
        body_path = manifest_path.parent / row["file"]
        if not body_path.exists():
            raise ConfigError(f"{manifest_path}:{lineno}: no such file {body_path}")
        docs.append(SourceDocument(
            doc_id=row["doc_id"], resource_type=row["resource_type"],
            title=row["title"], body=body_path.read_text(encoding="utf-8"),
            origin=row["origin"]))
    return docs

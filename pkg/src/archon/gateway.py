"""Provider-agnostic completion and embedding layer.

Two completion providers are supported: a deterministic scripted provider
backed by line-delimited fixture records keyed on (template_id, slot
digest), and a live HTTP chat-completions adapter. Embeddings come from
the built-in hash-v1 embedder or a live embedding service. Every complete
and embed call is appended to the transcript exactly once.

hash-v1 embedder contract (portable across languages): dimension 16;
lowercase the text and split on whitespace; for each token add 1.0 at
index (sum of the token's UTF-8 byte values) mod 16; L2-normalize.
Empty or whitespace-only text maps to the zero vector.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .clock import Clock
from .errors import (CompletionError, ConfigError, EmbedError, ScriptMissError,
                     SchemaValidationError, ValidationError)
from .hashing import fnv1a64_hex
from .schemas import validate_payload

TEMPLATE_IDS = ("summarize-doc", "extract-facets", "make-task-plan", "make-feature-plan",
                "make-search-config", "review-results", "compile-report", "rerank-knowledge")

# Required slot names per template; envelopes must carry exactly these.
TEMPLATE_SLOTS = {
    "summarize-doc": ("doc_id", "title", "body"),
    "extract-facets": ("doc_id", "title", "body", "summary"),
    "make-task-plan": ("instruction",),
    "make-feature-plan": ("task_type", "dataset", "kind", "knowledge_count", "hint"),
    "make-search-config": ("task_type", "dataset", "kind", "knowledge_count"),
    "review-results": ("dataset", "metric", "revisions_used", "meets_target"),
    "compile-report": ("dataset", "metric", "revisions_used"),
    "rerank-knowledge": ("stage", "query", "knowledge_count"),
}

MAX_INJECTED_TEXT = 512
MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class PromptEnvelope:
    """One structured request to a completion provider."""

    template_id: str
    slots: tuple[tuple[str, str], ...]
    injected_knowledge: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.template_id not in TEMPLATE_SLOTS:
            raise ValidationError(f"unknown template_id {self.template_id!r}")
        names = tuple(name for name, _ in self.slots)
        required = TEMPLATE_SLOTS[self.template_id]
        if sorted(names) != sorted(required):
            raise ValidationError(
                f"template {self.template_id} requires slots {sorted(required)}, got {sorted(names)}")
        for name, value in self.slots:
            if not isinstance(value, str):
                raise ValidationError(f"slot {name!r} must be a string")
        for item_id, text in self.injected_knowledge:
            if len(text) > MAX_INJECTED_TEXT:
                raise ValidationError(
                    f"injected knowledge {item_id} exceeds {MAX_INJECTED_TEXT} characters")

    def slot(self, name: str) -> str:
        for key, value in self.slots:
            if key == name:
                return value
        raise KeyError(name)

    def slot_dict(self) -> dict[str, str]:
        return dict(self.slots)


def make_envelope(template_id: str, slots: dict[str, str],
                  injected: Iterable[tuple[str, str]] = ()) -> PromptEnvelope:
    return PromptEnvelope(template_id, tuple(slots.items()), tuple(injected))


def envelope_digest(slots: dict[str, str] | tuple[tuple[str, str], ...]) -> str:
    """Digest of a slot map: fnv1a64 over 'name US value RS' in sorted name order."""
    if isinstance(slots, tuple):
        slots = dict(slots)
    blob = "".join(f"{name}\x1f{slots[name]}\x1e" for name in sorted(slots))
    return fnv1a64_hex(blob)


@dataclass
class StructuredResponse:
    template_id: str
    payload: dict
    raw_text: str
    attempts: int


@dataclass
class TranscriptEntry:
    call: str  # "complete" | "embed"
    template_id: str | None
    slots: dict[str, str] | None
    injected_ids: tuple[str, ...]
    ok: bool
    attempts: int
    wall_ms: int
    token_estimate: int
    payload: dict | None = None
    error: str | None = None
    detail: dict | None = None

    def to_dict(self) -> dict:
        return {
            "call": self.call,
            "template_id": self.template_id,
            "slots": self.slots,
            "injected_ids": list(self.injected_ids),
            "ok": self.ok,
            "attempts": self.attempts,
            "wall_ms": self.wall_ms,
            "token_estimate": self.token_estimate,
            "payload": self.payload,
            "error": self.error,
            "detail": self.detail,
        }


class Transcript:
    """Append-only log of gateway traffic; appends are serialized."""

    def __init__(self):
        self._entries: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def append(self, entry: TranscriptEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> list[TranscriptEntry]:
        with self._lock:
            return list(self._entries)

    def total_token_estimate(self) -> int:
        with self._lock:
            return sum(e.token_estimate for e in self._entries)

    def to_dicts(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]


def _token_estimate(env: PromptEnvelope | None, raw_parts: Sequence[str]) -> int:
    chars = 0
    if env is not None:
        chars += sum(len(v) for _, v in env.slots)
        chars += sum(len(t) for _, t in env.injected_knowledge)
    chars += sum(len(r) for r in raw_parts)
    return math.ceil(chars / 4)


# ---------------------------------------------------------------------------
# Completion providers
# ---------------------------------------------------------------------------


class ScriptedProvider:
    """Deterministic provider backed by fixture records.

    Fixture files are JSONL; each record holds template_id, payload, and
    either a precomputed slot_digest or a slots object the digest is
    derived from. Lookup is exact on (template_id, slot digest); a miss is
    a fixture bug and raises ScriptMissError immediately.
    """

    name = "scripted"

    def __init__(self, entries: dict[tuple[str, str], dict]):
        self._entries = entries

    @classmethod
    def from_path(cls, path: str | Path) -> "ScriptedProvider":
        entries: dict[tuple[str, str], dict] = {}
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: bad fixture record: {exc}")
            if "template_id" not in record or "payload" not in record:
                raise ConfigError(f"{path}:{lineno}: fixture record needs template_id and payload")
            template_id = record["template_id"]
            if template_id not in TEMPLATE_SLOTS:
                raise ConfigError(f"{path}:{lineno}: unknown template_id {template_id!r}")
            if "slot_digest" in record:
                digest = record["slot_digest"]
            elif "slots" in record:
                digest = envelope_digest(record["slots"])
            else:
                raise ConfigError(f"{path}:{lineno}: fixture record needs slot_digest or slots")
            key = (template_id, digest)
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate fixture key {key}")
            entries[key] = record["payload"]
        return cls(entries)

    def generate(self, env: PromptEnvelope, feedback: str | None = None) -> str:
        key = (env.template_id, envelope_digest(env.slots))
        if key not in self._entries:
            raise ScriptMissError(
                f"no fixture for template {env.template_id} slots {env.slot_dict()!r} "
                f"(digest {key[1]})")
        return json.dumps(self._entries[key], sort_keys=True)


class LiveProvider:
    """Chat-completions HTTP adapter; the model must answer with one JSON object."""

    name = "live"

    def __init__(self, base_url: str, model: str, api_key: str | None = None,
                 timeout_s: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s

    def generate(self, env: PromptEnvelope, feedback: str | None = None) -> str:
        import requests

        prompt = render_prompt(env)
        if feedback:
            prompt += ("\n\nYour previous answer failed validation: "
                       f"{feedback}\nAnswer again with a single corrected JSON object.")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(
            f"{self.base_url}/chat/completions",
            json={"model": self.model,
                  "messages": [{"role": "user", "content": prompt}]},
            headers=headers,
            timeout=self.timeout_s,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


def render_prompt(env: PromptEnvelope) -> str:
    """Render the template file for an envelope (live providers only)."""
    template = (resources.files("archon") / "templates" / f"{env.template_id}.txt").read_text(
        encoding="utf-8")
    text = template
    for name, value in env.slots:
        text = text.replace("{" + name + "}", value)
    if env.injected_knowledge:
        lines = "\n".join(f"- [{item_id}] {t}" for item_id, t in env.injected_knowledge)
        text += f"\n\nRetrieved knowledge:\n{lines}\n"
    return text


def _strip_fences(raw: str) -> str:
    text = raw.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
        if text.rstrip().endswith("```"):
            text = text.rstrip()[:-3]
    return text.strip()


def complete(env: PromptEnvelope, provider, transcript: Transcript | None = None,
             clock: Clock | None = None) -> StructuredResponse:
    """Run one completion with schema validation and bounded retries.

    The validation error message is fed back to the provider on retry.
    The call lands in the transcript exactly once, whatever the outcome.
    """
    start = clock.now_ms() if clock else 0
    raw_attempts: list[str] = []
    feedback: str | None = None

    def log(ok: bool, attempts: int, payload: dict | None, error: str | None):
        if transcript is not None:
            wall = (clock.now_ms() - start) if clock else 0
            transcript.append(TranscriptEntry(
                call="complete", template_id=env.template_id, slots=env.slot_dict(),
                injected_ids=tuple(i for i, _ in env.injected_knowledge),
                ok=ok, attempts=attempts, wall_ms=wall,
                token_estimate=_token_estimate(env, raw_attempts),
                payload=payload, error=error))

    for attempt in range(1, MAX_ATTEMPTS + 1):
        try:
            raw = provider.generate(env, feedback)
        except ScriptMissError as exc:
            log(False, attempt, None, str(exc))
            raise
        raw_attempts.append(raw)
        try:
            decoded = json.loads(_strip_fences(raw))
        except json.JSONDecodeError as exc:
            feedback = f"response is not valid JSON: {exc}"
            continue
        try:
            payload = validate_payload(env.template_id, decoded, env)
        except SchemaValidationError as exc:
            feedback = str(exc)
            continue
        log(True, attempt, payload, None)
        return StructuredResponse(env.template_id, payload, raw, attempt)

    log(False, MAX_ATTEMPTS, None, feedback)
    raise CompletionError(
        f"template {env.template_id}: {MAX_ATTEMPTS} attempts failed validation "
        f"(last error: {feedback})", raw_attempts)


# ---------------------------------------------------------------------------
# Embedders
# ---------------------------------------------------------------------------


class HashEmbedder:
    """The deterministic hash-v1 embedder (see module docstring)."""

    name = "hash-v1"
    dim = 16

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            for token in text.lower().split():
                vec[sum(token.encode("utf-8")) % self.dim] += 1.0
            norm = math.sqrt(sum(c * c for c in vec))
            if norm > 0.0:
                vec = [c / norm for c in vec]
            out.append(vec)
        return out


class LiveEmbedder:
    """HTTP embedding-service adapter (OpenAI-style /embeddings endpoint)."""

    def __init__(self, base_url: str, model: str = "all-MiniLM-L6-v2",
                 api_key: str | None = None, timeout_s: float = 60.0, retries: int = 3):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.name = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.retries = retries
        self.dim: int | None = None  # discovered from the first response

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for _ in range(self.retries):
            try:
                resp = requests.post(
                    f"{self.base_url}/embeddings",
                    json={"model": self.model, "input": list(texts)},
                    headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                rows = [row["embedding"] for row in resp.json()["data"]]
                break
            except Exception as exc:  # noqa: BLE001 - bounded retry then EmbedError
                last_error = exc
        else:
            raise EmbedError(f"embedding service unreachable: {last_error}")
        out = []
        for text, vec in zip(texts, rows):
            if self.dim is None:
                self.dim = len(vec)
            if not text.strip():
                out.append([0.0] * len(vec))
                continue
            norm = math.sqrt(sum(c * c for c in vec))
            out.append([c / norm for c in vec] if norm > 0 else list(vec))
        return out


def embed(texts: Sequence[str], embedder, transcript: Transcript | None = None,
          clock: Clock | None = None) -> list[list[float]]:
    """Embed texts; non-empty texts yield unit vectors, empty the zero vector."""
    start = clock.now_ms() if clock else 0
    vectors = embedder.embed(texts)
    if transcript is not None:
        wall = (clock.now_ms() - start) if clock else 0
        transcript.append(TranscriptEntry(
            call="embed", template_id=None, slots=None, injected_ids=(),
            ok=True, attempts=1, wall_ms=wall,
            token_estimate=math.ceil(sum(len(t) for t in texts) / 4),
            detail={"texts": len(texts), "embedder": embedder.name}))
    return vectors

"""Exception hierarchy for the archon engine.

Every failure surfaced to callers derives from ArchonError so the CLI can
map any engine failure to exit code 2 without enumerating subclasses.
"""

from __future__ import annotations


class ArchonError(Exception):
    """Base class for all archon errors."""


class ValidationError(ArchonError):
    """A value violates a documented invariant or precondition."""


class DuplicateError(ArchonError):
    """A document with the same doc_id is already in the store."""


class IngestError(ArchonError):
    """Knowledge extraction failed; carries the gateway transcript."""

    def __init__(self, message: str, transcript=None):
        super().__init__(message)
        self.transcript = transcript


class ConfigError(ArchonError):
    """Invalid configuration value; message names the offending field."""


class LoadError(ArchonError):
    """A snapshot or run file could not be parsed."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class SchemaValidationError(ValidationError):
    """A structured payload does not conform to its template schema."""


class CompletionError(ArchonError):
    """All completion attempts failed schema validation."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = list(attempts or [])


class ScriptMissError(ArchonError):
    """The scripted provider has no fixture entry for an envelope.

    This indicates a broken fixture (a test bug), never a runtime state
    to recover from, so it is raised without retries.
    """


class EmbedError(ArchonError):
    """The embedding provider failed after bounded retries."""


class CodecError(ArchonError):
    """A canonical genotype string is malformed; names the bad segment."""

    def __init__(self, segment: str, message: str):
        super().__init__(f"segment '{segment}': {message}")
        self.segment = segment


class EvalError(ArchonError):
    """A genotype evaluation failed.

    ``reason`` is one of "timeout", "protocol", "invalid", or "worker";
    ``raw`` carries offending wire bytes for protocol violations.
    """

    def __init__(self, message: str, reason: str = "worker", raw: bytes | None = None):
        super().__init__(message)
        self.reason = reason
        self.raw = raw


class UnknownDatasetError(ArchonError):
    """Dataset name not present in the registry."""


class PlanError(ArchonError):
    """The planning agent could not produce a valid task plan."""


class FeatureError(ArchonError):
    """The data agent could not produce a valid feature plan."""


class ConfigureError(ArchonError):
    """The configuration agent could not produce a valid search config."""


class ReviewError(ArchonError):
    """The review step failed."""


class PipelineError(ArchonError):
    """A pipeline stage aborted; carries the stage name and transcript."""

    def __init__(self, stage: str, message: str, transcript=None):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
        self.transcript = transcript

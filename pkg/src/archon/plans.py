"""Domain types produced and consumed by the agent pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .genotype import ArchGenotype, SearchSpace
from .schemas import DIRECTIVES, HIGHER_IS_BETTER, HINTS, METRICS_FOR_TASK, VERDICTS


@dataclass(frozen=True)
class Budget:
    max_candidates: int
    max_revisions: int
    seeds_per_eval: int

    def __post_init__(self):
        for name in ("max_candidates", "max_revisions", "seeds_per_eval"):
            if getattr(self, name) < 1:
                raise ValidationError(f"budget.{name} must be positive")


@dataclass(frozen=True)
class TaskPlan:
    """Structured interpretation of a user instruction."""

    task_type: str
    dataset: str
    metric: str
    higher_is_better: bool
    budget: Budget

    def __post_init__(self):
        if self.task_type not in METRICS_FOR_TASK:
            raise ValidationError(f"unknown task type {self.task_type!r}")
        if self.metric not in METRICS_FOR_TASK[self.task_type]:
            raise ValidationError(
                f"metric {self.metric!r} inconsistent with task {self.task_type!r}")
        if self.higher_is_better != HIGHER_IS_BETTER[self.metric]:
            raise ValidationError(f"higher_is_better wrong for metric {self.metric!r}")
        if not self.dataset:
            raise ValidationError("dataset must be non-empty")


@dataclass(frozen=True)
class FeaturePlan:
    directives: tuple[str, ...]
    citations: tuple[str, ...]

    def __post_init__(self):
        for d in self.directives:
            if d not in DIRECTIVES:
                raise ValidationError(f"unknown directive {d!r}")
        if len(set(self.directives)) != len(self.directives):
            raise ValidationError("duplicate directive")


@dataclass(frozen=True)
class SearchConfig:
    space: SearchSpace
    algorithm: str  # "random" | "evolutionary"
    params: dict
    seed_genotypes: tuple[ArchGenotype, ...]
    citations: tuple[str, ...]


@dataclass(frozen=True)
class Decision:
    verdict: str
    hints: tuple[str, ...]
    rationale: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        for h in self.hints:
            if h not in HINTS:
                raise ValidationError(f"unknown hint {h!r}")
        if self.verdict == "revise" and not self.hints:
            raise ValidationError("revise decision requires hints")


@dataclass
class Resource:
    wall_ms: int = 0
    evals: int = 0
    token_estimate: int = 0


@dataclass
class ExperimentReport:
    """Compiled summary of one completed run; the unit stored back into
    the experiment knowledge base."""

    run_id: str
    plan: TaskPlan
    best_genotype: str  # canonical encoding
    metric_mean: float
    metric_std: float
    revisions_used: int
    resource: Resource = field(default_factory=Resource)


def report_text(report: ExperimentReport) -> str:
    """Deterministic text serialization of a report for embedding/storage.

    Keeps the dataset name verbatim and the metric mean at four decimals
    so reports are retrievable by dataset and readable at a glance.
    Resource numbers are excluded: they are sealed after this text is
    embedded (see agents.compile_report).
    """
    return (
        f"experiment report {report.run_id} | dataset {report.plan.dataset} | "
        f"task {report.plan.task_type} | metric {report.plan.metric} | "
        f"mean {report.metric_mean:.4f} | std {report.metric_std:.4f} | "
        f"best {report.best_genotype} | revisions {report.revisions_used}"
    )


def validate_report(report: ExperimentReport) -> None:
    """Raise ValidationError when a report is missing required fields."""
    if not report.run_id:
        raise ValidationError("report missing run_id")
    if not isinstance(report.plan, TaskPlan):
        raise ValidationError("report missing task plan")
    if not report.best_genotype:
        raise ValidationError("report missing best genotype")
    if not isinstance(report.metric_mean, (int, float)):
        raise ValidationError("report missing metric_mean")
    if not isinstance(report.metric_std, (int, float)) or report.metric_std < 0:
        raise ValidationError("report metric_std must be a non-negative number")
    if report.revisions_used < 0:
        raise ValidationError("report revisions_used must be >= 0")

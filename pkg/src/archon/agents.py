"""The agent pipeline: planning, data, configuration, and evaluation agents
around the gateway, knowledge stores, search, and evaluator.

Stage order is fixed: plan -> profile -> features -> configure -> search ->
review -> (revise loop) -> report. Each stage entry emits a progress event,
so the order is assertable from the event stream. A full run is a pure
function of (instruction, fixtures, rng seed) under a fixed clock.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Callable

from .clock import Clock, FixedClock
from .datasets import DatasetRegistry, GraphProfile
from .errors import (ArchonError, CompletionError, ConfigureError, FeatureError,
                     PipelineError, PlanError, ReviewError)
from .evaluator import EvalRequest, EvalResult, evaluate
from .gateway import Transcript, complete, make_envelope
from .genotype import OPS, ArchGenotype, SearchSpace, encode
from .knowledge import KnowledgeStore, RetrievalQuery
from .plans import (Budget, Decision, ExperimentReport, FeaturePlan, Resource,
                    SearchConfig, TaskPlan)
from .rng import SplitMix64
from .schemas import HIGHER_IS_BETTER
from .search import EvolveBudget, SearchTrace, evolve, random_search, seed_from_knowledge

_RUN_COUNTER = itertools.count(1)
_RUN_COUNTER_LOCK = threading.Lock()


@dataclass
class PipelineSettings:
    """Everything a pipeline run needs, resolved from CliConfig."""

    provider: object
    prior_store: KnowledgeStore
    experiment_store: KnowledgeStore
    backend: object
    registry: DatasetRegistry
    budget: Budget
    rng_seed: int
    clock: Clock = field(default_factory=FixedClock)
    dataset_map: dict[str, str] = field(default_factory=dict)
    review_target: float = 0.0
    per_type_k: int = 5
    final_k: int = 8
    epochs_cap: int = 300
    update_experiment_kb: bool = True
    events: Callable[[dict], None] | None = None
    rerank_provider: object | None = None


@dataclass
class RunResult:
    run_id: str
    instruction: str
    seed: int
    plan: TaskPlan
    feature_plan: FeaturePlan
    config: SearchConfig
    decisions: list[Decision]
    traces: list[SearchTrace]
    report: ExperimentReport
    report_summary: str
    report_item_id: str | None
    transcript: Transcript


def plan(instruction: str, settings: PipelineSettings,
         transcript: Transcript) -> TaskPlan:
    """Planning agent: interpret the instruction into a task plan."""
    if not instruction.strip():
        raise PlanError("instruction must be non-empty")
    env = make_envelope("make-task-plan", {"instruction": instruction})
    try:
        resp = complete(env, settings.provider, transcript, settings.clock)
    except CompletionError as exc:
        raise PlanError(f"task planning failed: {exc}") from exc
    payload = resp.payload
    dataset = settings.dataset_map.get(payload["dataset"], payload["dataset"])
    try:
        return TaskPlan(
            task_type=payload["task_type"],
            dataset=dataset,
            metric=payload["metric"],
            higher_is_better=HIGHER_IS_BETTER[payload["metric"]],
            budget=settings.budget)
    except ArchonError as exc:
        raise PlanError(f"invalid task plan: {exc}") from exc


def _retrieve_injected(kb: KnowledgeStore, query_text: str, stage: str,
                       settings: PipelineSettings, transcript: Transcript):
    ranked = kb.retrieve(
        RetrievalQuery(query_text, stage, settings.per_type_k, settings.final_k),
        transcript, settings.clock, rerank_provider=settings.rerank_provider)
    return [(entry.item_id, kb.get(entry.item_id).text) for entry in ranked.entries]


def propose_features(task_plan: TaskPlan, profile: GraphProfile, kb: KnowledgeStore,
                     settings: PipelineSettings, transcript: Transcript,
                     hint: str = "") -> FeaturePlan:
    """Data agent: pick feature-engineering directives with prior knowledge."""
    injected = _retrieve_injected(
        kb, f"feature engineering {task_plan.task_type} {task_plan.dataset} {profile.kind}",
        "data-agent", settings, transcript)
    env = make_envelope(
        "make-feature-plan",
        {"task_type": task_plan.task_type, "dataset": task_plan.dataset,
         "kind": profile.kind, "knowledge_count": str(len(injected)), "hint": hint},
        injected)
    try:
        resp = complete(env, settings.provider, transcript, settings.clock)
    except CompletionError as exc:
        raise FeatureError(f"feature planning failed: {exc}") from exc
    return FeaturePlan(tuple(resp.payload["directives"]), tuple(resp.payload["citations"]))


def _cap_params(algorithm: str, params: dict, max_candidates: int) -> dict:
    """Keep the search budget within max_candidates evaluations."""
    capped = dict(params)
    if algorithm == "evolutionary":
        population = capped["population"]
        if population * capped["generations"] > max_candidates:
            capped["generations"] = max(1, max_candidates // population)
    else:
        capped["samples"] = min(capped["samples"], max_candidates)
    return capped


def configure_search(task_plan: TaskPlan, profile: GraphProfile, kb: KnowledgeStore,
                     settings: PipelineSettings, transcript: Transcript) -> SearchConfig:
    """Configuration agent: search space, algorithm, knowledge-seeded genotypes."""
    injected = _retrieve_injected(
        kb, f"gnn architecture design {task_plan.task_type} {profile.kind}",
        "configuration-agent", settings, transcript)
    env = make_envelope(
        "make-search-config",
        {"task_type": task_plan.task_type, "dataset": task_plan.dataset,
         "kind": profile.kind, "knowledge_count": str(len(injected))},
        injected)
    try:
        resp = complete(env, settings.provider, transcript, settings.clock)
    except CompletionError as exc:
        raise ConfigureError(f"search configuration failed: {exc}") from exc
    payload = resp.payload
    try:
        space = SearchSpace(
            allowed_ops=tuple(payload["allowed_ops"]),
            max_layers=payload["max_layers"],
            allowed_dims=tuple(sorted(payload["allowed_dims"])),
            allow_skips=payload["allow_skips"],
            task_type=task_plan.task_type)
    except ArchonError as exc:
        raise ConfigureError(f"invalid search space: {exc}") from exc
    params = _cap_params(payload["algorithm"], payload["params"],
                         task_plan.budget.max_candidates)
    facets = [(kb.get(item_id).facet_type, kb.get(item_id).text)
              for item_id, _ in injected]
    seeds = seed_from_knowledge(facets, space)
    return SearchConfig(space, payload["algorithm"], params, tuple(seeds),
                        tuple(payload["citations"]))


def review(trace: SearchTrace, task_plan: TaskPlan, kb: KnowledgeStore,
           revisions_used: int, settings: PipelineSettings,
           transcript: Transcript) -> Decision:
    """Planning agent review: LLM verdict plus the deterministic budget guard."""
    _, best_score = trace.best_per_generation[-1]
    best_metric = best_score if task_plan.higher_is_better else -best_score
    if task_plan.higher_is_better:
        meets = best_metric >= settings.review_target
    else:
        meets = best_metric <= settings.review_target
    injected = _retrieve_injected(
        kb, f"experiment results {task_plan.dataset} {task_plan.task_type}",
        "planning-review", settings, transcript)
    env = make_envelope(
        "review-results",
        {"dataset": task_plan.dataset, "metric": task_plan.metric,
         "revisions_used": str(revisions_used), "meets_target": "yes" if meets else "no"},
        injected)
    try:
        resp = complete(env, settings.provider, transcript, settings.clock)
    except CompletionError as exc:
        raise ReviewError(f"review failed: {exc}") from exc
    payload = resp.payload
    if payload["verdict"] == "revise" and revisions_used >= task_plan.budget.max_revisions:
        return Decision("accept", (),
                        payload["rationale"] + " (revision budget exhausted)")
    return Decision(payload["verdict"], tuple(payload["hints"]), payload["rationale"])


def compile_report(run_id: str, task_plan: TaskPlan, traces: list[SearchTrace],
                   revisions_used: int, result_cache: dict[str, EvalResult],
                   settings: PipelineSettings, transcript: Transcript,
                   run_start_ms: int) -> tuple[ExperimentReport, str | None, str]:
    """Compile the run report and feed it back into the experiment KB.

    resource.token_estimate is sealed after the report upsert so it equals
    the final transcript total (the upsert itself embeds the report text).
    """
    env = make_envelope(
        "compile-report",
        {"dataset": task_plan.dataset, "metric": task_plan.metric,
         "revisions_used": str(revisions_used)})
    resp = complete(env, settings.provider, transcript, settings.clock)
    best_enc, best_score = traces[-1].best_per_generation[-1]
    metric_mean = best_score if task_plan.higher_is_better else -best_score
    cached = result_cache.get(best_enc)
    metric_std = cached.metric_std if cached is not None else 0.0
    report = ExperimentReport(
        run_id=run_id,
        plan=task_plan,
        best_genotype=best_enc,
        metric_mean=metric_mean,
        metric_std=metric_std,
        revisions_used=revisions_used,
        resource=Resource(evals=sum(t.evals_used for t in traces)))
    item_id = None
    if settings.update_experiment_kb:
        item_id = settings.experiment_store.upsert_experiment_report(
            report, transcript, settings.clock)
    report.resource.wall_ms = settings.clock.now_ms() - run_start_ms
    report.resource.token_estimate = transcript.total_token_estimate()
    return report, item_id, resp.payload["summary"]


def _widen_ops(space: SearchSpace) -> SearchSpace:
    """Add one op from the fixed priority list (OPS order) to the space."""
    for op in OPS:
        if op not in space.allowed_ops:
            return replace(space, allowed_ops=space.allowed_ops + (op,))
    return space


def _apply_hints(hints: tuple[str, ...], config: SearchConfig, feature_plan: FeaturePlan,
                 task_plan: TaskPlan, profile: GraphProfile,
                 settings: PipelineSettings, transcript: Transcript
                 ) -> tuple[SearchConfig, FeaturePlan]:
    space = config.space
    params = dict(config.params)
    for hint in hints:
        if hint == "widen-ops":
            space = _widen_ops(space)
        elif hint == "increase-generations":
            if config.algorithm == "evolutionary":
                params["generations"] = math.ceil(params["generations"] * 1.5)
            else:
                params["samples"] = math.ceil(params["samples"] * 1.5)
            params = _cap_params(config.algorithm, params, task_plan.budget.max_candidates)
        elif hint == "adjust-features":
            feature_plan = propose_features(task_plan, profile, settings.prior_store,
                                            settings, transcript, hint="adjust-features")
    config = SearchConfig(space, config.algorithm, params,
                          config.seed_genotypes, config.citations)
    return config, feature_plan


def _make_evaluator(task_plan: TaskPlan, feature_plan: FeaturePlan,
                    settings: PipelineSettings, result_cache: dict[str, EvalResult],
                    request_counter) -> Callable[[ArchGenotype], float]:
    backend = settings.backend
    backend.higher_is_better = task_plan.higher_is_better
    seeds = tuple(range(1, task_plan.budget.seeds_per_eval + 1))

    def evaluator(g: ArchGenotype) -> float:
        enc = encode(g)
        req = EvalRequest(
            request_id=f"req-{next(request_counter):04d}",
            genotype=enc,
            feature_plan=feature_plan.directives,
            dataset=task_plan.dataset,
            seeds=seeds,
            epochs_cap=settings.epochs_cap)
        result = evaluate(req, backend)
        result_cache[enc] = result
        return result.metric_mean if task_plan.higher_is_better else -result.metric_mean

    return evaluator


def run_pipeline(instruction: str, settings: PipelineSettings) -> RunResult:
    """Execute one full knowledge-guided design run."""
    transcript = Transcript()
    clock = settings.clock
    run_start = clock.now_ms()
    rng = SplitMix64(settings.rng_seed)
    emit = settings.events or (lambda event: None)
    with _RUN_COUNTER_LOCK:
        run_id = f"run-{next(_RUN_COUNTER):04d}"

    stage = "plan"
    try:
        emit({"event": "stage", "stage": "plan"})
        task_plan = plan(instruction, settings, transcript)

        stage = "profile"
        emit({"event": "stage", "stage": "profile"})
        profile = settings.registry.graph_profile(task_plan.dataset)

        stage = "features"
        emit({"event": "stage", "stage": "features"})
        feature_plan = propose_features(task_plan, profile, settings.prior_store,
                                        settings, transcript)

        stage = "configure"
        emit({"event": "stage", "stage": "configure"})
        config = configure_search(task_plan, profile, settings.prior_store,
                                  settings, transcript)

        decisions: list[Decision] = []
        traces: list[SearchTrace] = []
        result_cache: dict[str, EvalResult] = {}
        request_counter = itertools.count(1)
        revisions_used = 0
        while True:
            stage = "search"
            search_round = len(traces)
            emit({"event": "stage", "stage": "search", "round": search_round})
            evaluator = _make_evaluator(task_plan, feature_plan, settings,
                                        result_cache, request_counter)

            def on_generation(index: int, best_enc: str, best_score: float):
                emit({"event": "generation", "round": search_round,
                      "generation": index, "best": best_score})

            if config.algorithm == "evolutionary":
                trace = evolve(config.space, evaluator,
                               EvolveBudget(config.params["population"],
                                            config.params["generations"]),
                               config.seed_genotypes, rng, on_generation)
            else:
                trace = random_search(config.space, evaluator,
                                      config.params["samples"], rng, on_generation)
            traces.append(trace)

            stage = "review"
            emit({"event": "stage", "stage": "review"})
            decision = review(trace, task_plan, settings.experiment_store,
                              revisions_used, settings, transcript)
            decisions.append(decision)
            emit({"event": "decision", "verdict": decision.verdict,
                  "hints": list(decision.hints)})
            if decision.verdict == "accept":
                break
            revisions_used += 1
            stage = "revise"
            emit({"event": "stage", "stage": "revise", "hints": list(decision.hints)})
            config, feature_plan = _apply_hints(decision.hints, config, feature_plan,
                                                task_plan, profile, settings, transcript)

        stage = "report"
        emit({"event": "stage", "stage": "report"})
        report, item_id, summary = compile_report(
            run_id, task_plan, traces, revisions_used, result_cache,
            settings, transcript, run_start)
        return RunResult(
            run_id=run_id, instruction=instruction, seed=settings.rng_seed,
            plan=task_plan, feature_plan=feature_plan, config=config,
            decisions=decisions, traces=traces, report=report,
            report_summary=summary, report_item_id=item_id, transcript=transcript)
    except ArchonError as exc:
        if isinstance(exc, PipelineError):
            raise
        raise PipelineError(stage, str(exc), transcript) from exc

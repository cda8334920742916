"""Run file serialization: versioned `archon-run v1` documents.

A run file is the header line followed by one canonical JSON object
(sorted keys); identical runs serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from .agents import RunResult
from .errors import LoadError
from .plans import ExperimentReport, TaskPlan

RUN_HEADER = "archon-run v1"


def plan_to_dict(plan: TaskPlan) -> dict:
    return {
        "task_type": plan.task_type,
        "dataset": plan.dataset,
        "metric": plan.metric,
        "higher_is_better": plan.higher_is_better,
        "budget": {
            "max_candidates": plan.budget.max_candidates,
            "max_revisions": plan.budget.max_revisions,
            "seeds_per_eval": plan.budget.seeds_per_eval,
        },
    }


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "run_id": report.run_id,
        "plan": plan_to_dict(report.plan),
        "best_genotype": report.best_genotype,
        "metric_mean": report.metric_mean,
        "metric_std": report.metric_std,
        "revisions_used": report.revisions_used,
        "resource": {
            "wall_ms": report.resource.wall_ms,
            "evals": report.resource.evals,
            "token_estimate": report.resource.token_estimate,
        },
    }


def run_result_to_dict(result: RunResult) -> dict:
    return {
        "run_id": result.run_id,
        "instruction": result.instruction,
        "seed": result.seed,
        "plan": plan_to_dict(result.plan),
        "feature_plan": {
            "directives": list(result.feature_plan.directives),
            "citations": list(result.feature_plan.citations),
        },
        "decisions": [
            {"verdict": d.verdict, "hints": list(d.hints), "rationale": d.rationale}
            for d in result.decisions
        ],
        "traces": [t.to_dict() for t in result.traces],
        "report": report_to_dict(result.report),
        "report_summary": result.report_summary,
        "report_item_id": result.report_item_id,
        "transcript": result.transcript.to_dicts(),
    }


def save_run(path: str | Path, result: RunResult) -> None:
    payload = json.dumps(run_result_to_dict(result), sort_keys=True,
                         separators=(",", ":"))
    Path(path).write_text(f"{RUN_HEADER}\n{payload}\n", encoding="utf-8")


def load_run(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n", 1)
    if not lines or lines[0] != RUN_HEADER:
        raise LoadError(f"{path}: expected header {RUN_HEADER!r}", byte_offset=0)
    if len(lines) < 2 or not lines[1].strip():
        raise LoadError(f"{path}: missing run payload", byte_offset=len(lines[0]))
    try:
        return json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: corrupt run payload: {exc}",
                        byte_offset=len(lines[0]) + 1 + exc.pos)


def format_run_human(run: dict) -> str:
    """Human-readable run summary: the designed GNN, performance, resources."""
    report = run["report"]
    resource = report["resource"]
    lines = [
        f"run {run['run_id']}  (seed {run['seed']})",
        f"instruction : {run['instruction']}",
        f"task        : {report['plan']['task_type']} on {report['plan']['dataset']}",
        f"designed GNN: {report['best_genotype']}",
        f"performance : {report['plan']['metric']} = {report['metric_mean']:.4f} "
        f"(std {report['metric_std']:.4f})",
        f"revisions   : {report['revisions_used']}",
        f"resources   : {resource['evals']} evaluations, "
        f"{resource['wall_ms']} ms, ~{resource['token_estimate']} tokens",
        f"summary     : {run['report_summary']}",
    ]
    return "\n".join(lines)

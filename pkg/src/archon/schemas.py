"""Per-template output schemas for structured gateway responses.

Each template declares a validator that checks a decoded JSON payload and
returns a normalized copy. Validation errors carry precise messages
because they are fed back to live providers as retry guidance. Citation
strings are resolved here against the envelope's injected knowledge
(exact item_id match first, then substring match on item text) so that
downstream plans only ever hold real item ids.
"""

from __future__ import annotations

from typing import Any

from .errors import SchemaValidationError
from .genotype import HIDDEN_DIMS, MAX_LAYERS, OPS, TASK_TYPES

FACET_TYPES = ("architecture-design", "dataset-usage", "training-technique", "evaluation-result")
METRICS = ("accuracy", "rocauc", "rmse")
DIRECTIVES = ("normalize-features", "add-degree-feature", "self-loops",
              "row-normalize-adjacency", "pca-reduce")
HINTS = ("widen-ops", "increase-generations", "adjust-features")
VERDICTS = ("accept", "revise")

# Metrics legal for each task type; rmse is the only lower-is-better metric.
METRICS_FOR_TASK = {
    "node-classification": ("accuracy",),
    "graph-classification": ("accuracy", "rocauc"),
    "link-ranking": ("rmse",),
}
HIGHER_IS_BETTER = {"accuracy": True, "rocauc": True, "rmse": False}


def _require(payload: dict, keys: tuple[str, ...], template: str) -> None:
    missing = [k for k in keys if k not in payload]
    if missing:
        raise SchemaValidationError(f"{template}: missing keys {missing}")
    extra = [k for k in payload if k not in keys]
    if extra:
        raise SchemaValidationError(f"{template}: unexpected keys {extra}")


def _non_empty_str(value: Any, name: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaValidationError(f"{name} must be a non-empty string")
    return value


def _resolve_citations(raw: Any, injected: tuple[tuple[str, str], ...]) -> list[str]:
    """Map citation strings to injected item ids.

    A citation is either an exact item_id of an injected item or a
    substring of an injected item's text (first match in injection order).
    """
    if not isinstance(raw, list) or any(not isinstance(c, str) or not c for c in raw):
        raise SchemaValidationError("citations must be a list of non-empty strings")
    ids = [item_id for item_id, _ in injected]
    resolved: list[str] = []
    for cite in raw:
        if cite in ids:
            resolved.append(cite)
            continue
        for item_id, text in injected:
            if cite in text:
                resolved.append(item_id)
                break
        else:
            raise SchemaValidationError(
                f"citation {cite!r} matches no injected knowledge item")
    # Preserve order, drop duplicates.
    seen: set[str] = set()
    return [c for c in resolved if not (c in seen or seen.add(c))]


def _validate_summary(payload: dict, env) -> dict:
    _require(payload, ("problem", "approach", "summary"), "summarize-doc")
    return {
        "problem": _non_empty_str(payload["problem"], "problem"),
        "approach": _non_empty_str(payload["approach"], "approach"),
        "summary": _non_empty_str(payload["summary"], "summary"),
    }


def _validate_facet_list(payload: dict, env) -> dict:
    _require(payload, ("facets",), "extract-facets")
    facets = payload["facets"]
    if not isinstance(facets, list) or not facets:
        raise SchemaValidationError("facets must be a non-empty list")
    out = []
    for i, facet in enumerate(facets):
        if not isinstance(facet, dict):
            raise SchemaValidationError(f"facets[{i}] must be an object")
        _require(facet, ("facet_type", "text"), f"facets[{i}]")
        if facet["facet_type"] not in FACET_TYPES:
            raise SchemaValidationError(
                f"facets[{i}].facet_type {facet['facet_type']!r} not in {FACET_TYPES}")
        out.append({"facet_type": facet["facet_type"],
                    "text": _non_empty_str(facet["text"], f"facets[{i}].text")})
    return {"facets": out}


def _validate_task_plan(payload: dict, env) -> dict:
    _require(payload, ("task_type", "dataset", "metric"), "make-task-plan")
    task_type = payload["task_type"]
    if task_type not in TASK_TYPES:
        raise SchemaValidationError(f"task_type {task_type!r} not in {TASK_TYPES}")
    metric = payload["metric"]
    if metric not in METRICS:
        raise SchemaValidationError(f"metric {metric!r} not in {METRICS}")
    if metric not in METRICS_FOR_TASK[task_type]:
        raise SchemaValidationError(
            f"metric {metric!r} inconsistent with task type {task_type!r}")
    return {
        "task_type": task_type,
        "dataset": _non_empty_str(payload["dataset"], "dataset"),
        "metric": metric,
    }


def _validate_feature_plan(payload: dict, env) -> dict:
    _require(payload, ("directives", "citations"), "make-feature-plan")
    directives = payload["directives"]
    if not isinstance(directives, list):
        raise SchemaValidationError("directives must be a list")
    for d in directives:
        if d not in DIRECTIVES:
            raise SchemaValidationError(f"directive {d!r} not in {DIRECTIVES}")
    if len(set(directives)) != len(directives):
        raise SchemaValidationError("duplicate directive in feature plan")
    return {
        "directives": list(directives),
        "citations": _resolve_citations(payload["citations"], env.injected_knowledge),
    }


def _validate_search_config(payload: dict, env) -> dict:
    keys = ("allowed_ops", "max_layers", "allowed_dims", "allow_skips",
            "algorithm", "params", "citations")
    _require(payload, keys, "make-search-config")
    ops = payload["allowed_ops"]
    if (not isinstance(ops, list) or not ops or any(op not in OPS for op in ops)
            or len(set(ops)) != len(ops)):
        raise SchemaValidationError(f"allowed_ops must be distinct members of {OPS}")
    max_layers = payload["max_layers"]
    if not isinstance(max_layers, int) or not 1 <= max_layers <= MAX_LAYERS:
        raise SchemaValidationError(f"max_layers must be an integer in 1..{MAX_LAYERS}")
    dims = payload["allowed_dims"]
    if (not isinstance(dims, list) or not dims or any(d not in HIDDEN_DIMS for d in dims)
            or len(set(dims)) != len(dims)):
        raise SchemaValidationError(f"allowed_dims must be distinct members of {HIDDEN_DIMS}")
    if not isinstance(payload["allow_skips"], bool):
        raise SchemaValidationError("allow_skips must be a boolean")
    algorithm = payload["algorithm"]
    params = payload["params"]
    if not isinstance(params, dict):
        raise SchemaValidationError("params must be an object")
    if algorithm == "evolutionary":
        _require(params, ("population", "generations"), "params")
        if not isinstance(params["population"], int) or params["population"] < 2:
            raise SchemaValidationError("params.population must be an integer >= 2")
        if not isinstance(params["generations"], int) or params["generations"] < 1:
            raise SchemaValidationError("params.generations must be an integer >= 1")
    elif algorithm == "random":
        _require(params, ("samples",), "params")
        if not isinstance(params["samples"], int) or params["samples"] < 1:
            raise SchemaValidationError("params.samples must be an integer >= 1")
    else:
        raise SchemaValidationError(f"algorithm {algorithm!r} not in ('random', 'evolutionary')")
    return {
        "allowed_ops": list(ops),
        "max_layers": max_layers,
        "allowed_dims": list(dims),
        "allow_skips": payload["allow_skips"],
        "algorithm": algorithm,
        "params": dict(params),
        "citations": _resolve_citations(payload["citations"], env.injected_knowledge),
    }


def _validate_decision(payload: dict, env) -> dict:
    _require(payload, ("verdict", "hints", "rationale"), "review-results")
    verdict = payload["verdict"]
    if verdict not in VERDICTS:
        raise SchemaValidationError(f"verdict {verdict!r} not in {VERDICTS}")
    hints = payload["hints"]
    if not isinstance(hints, list) or any(h not in HINTS for h in hints):
        raise SchemaValidationError(f"hints must be members of {HINTS}")
    if len(set(hints)) != len(hints):
        raise SchemaValidationError("duplicate hint")
    if verdict == "revise" and not hints:
        raise SchemaValidationError("verdict 'revise' requires at least one hint")
    return {"verdict": verdict, "hints": list(hints),
            "rationale": _non_empty_str(payload["rationale"], "rationale")}


def _validate_report(payload: dict, env) -> dict:
    _require(payload, ("summary",), "compile-report")
    return {"summary": _non_empty_str(payload["summary"], "summary")}


def _validate_rerank(payload: dict, env) -> dict:
    _require(payload, ("order",), "rerank-knowledge")
    order = payload["order"]
    n = len(env.injected_knowledge)
    if not isinstance(order, list) or any(not isinstance(i, int) for i in order):
        raise SchemaValidationError("order must be a list of integers")
    if len(set(order)) != len(order):
        raise SchemaValidationError("order must not repeat indexes")
    if any(not 0 <= i < n for i in order):
        raise SchemaValidationError(f"order indexes must be in 0..{n - 1}")
    return {"order": list(order)}


VALIDATORS = {
    "summarize-doc": _validate_summary,
    "extract-facets": _validate_facet_list,
    "make-task-plan": _validate_task_plan,
    "make-feature-plan": _validate_feature_plan,
    "make-search-config": _validate_search_config,
    "review-results": _validate_decision,
    "compile-report": _validate_report,
    "rerank-knowledge": _validate_rerank,
}


def validate_payload(template_id: str, payload: Any, env) -> dict:
    """Validate and normalize a payload; raises SchemaValidationError."""
    if template_id not in VALIDATORS:
        raise SchemaValidationError(f"unknown template {template_id!r}")
    if not isinstance(payload, dict):
        raise SchemaValidationError("payload must be a single JSON object")
    return VALIDATORS[template_id](payload, env)

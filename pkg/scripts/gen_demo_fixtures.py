#!/usr/bin/env python3
"""Regenerate the scripted-provider fixtures under fixtures/demo/.

Extraction entries embed the corpus bodies verbatim (the slot digest
covers every slot), so this script derives them from the corpus files
instead of trusting hand-copied strings. Run from the repository root:
python3 scripts/gen_demo_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from archon.gateway import envelope_digest  # noqa: E402
from archon.knowledge import read_manifest  # noqa: E402

DEMO = Path(__file__).resolve().parents[1] / "fixtures" / "demo"

SUMMARIES = {
    "skipnet-paper": {
        "problem": "Deep message passing oversmooths on citation graphs.",
        "approach": "Wire shortcut paths around aggregation blocks.",
        "summary": "Skip connections around sampled-neighborhood aggregation "
                   "improve node classification on citation graphs.",
    },
    "pyg-docs": {
        "problem": "Raw citation graphs need preprocessing before training.",
        "approach": "Normalize features and the adjacency matrix.",
        "summary": "Row normalization and 64-dimensional graph convolutions "
                   "are strong defaults for citation graphs.",
    },
    "ogb-leaderboard": {
        "problem": "Which architectures lead public citation benchmarks.",
        "approach": "Snapshot of leaderboard entries and their setups.",
        "summary": "Attention-based models with shortcut wiring top the "
                   "citation node classification leaderboard.",
    },
}

FACETS = {
    "skipnet-paper": [
        {"facet_type": "architecture-design",
         "text": "skip connections improve node classification with sage"},
        {"facet_type": "training-technique",
         "text": "moderate dropout around 0.50 with shortcut wiring keeps deep stacks stable"},
    ],
    "pyg-docs": [
        {"facet_type": "dataset-usage",
         "text": "row normalization helps citation graphs"},
        {"facet_type": "architecture-design",
         "text": "gcn layers with hidden dimension 64 work well on citation networks"},
    ],
    "ogb-leaderboard": [
        {"facet_type": "evaluation-result",
         "text": "gat reaches the strongest accuracy on citation node classification benchmarks"},
    ],
}


def record(template_id: str, slots: dict[str, str], payload: dict) -> str:
    return json.dumps({
        "template_id": template_id,
        "slot_digest": envelope_digest(slots),
        "slots": slots,
        "payload": payload,
    }, sort_keys=True, ensure_ascii=False)


def extraction_records() -> list[str]:
    lines = []
    for doc in read_manifest(DEMO / "corpus" / "manifest.jsonl"):
        summary = SUMMARIES[doc.doc_id]
        lines.append(record(
            "summarize-doc",
            {"doc_id": doc.doc_id, "title": doc.title, "body": doc.body},
            summary))
        lines.append(record(
            "extract-facets",
            {"doc_id": doc.doc_id, "title": doc.title, "body": doc.body,
             "summary": summary["summary"]},
            {"facets": FACETS[doc.doc_id]}))
    return lines


def pipeline_records(review_entries: list[tuple[str, str, dict]],
                     report_revisions: list[str]) -> list[str]:
    lines = [
        record("make-task-plan",
               {"instruction": "predict the category of articles within a citation network"},
               {"task_type": "node-classification", "dataset": "Cora",
                "metric": "accuracy"}),
        record("make-feature-plan",
               {"task_type": "node-classification", "dataset": "toy-cora",
                "kind": "homophilous-node", "knowledge_count": "5", "hint": ""},
               {"directives": ["normalize-features", "row-normalize-adjacency"],
                "citations": ["row normalization"]}),
        record("make-search-config",
               {"task_type": "node-classification", "dataset": "toy-cora",
                "kind": "homophilous-node", "knowledge_count": "5"},
               {"allowed_ops": ["gcn", "sage", "gat"], "max_layers": 3,
                "allowed_dims": [32, 64, 128], "allow_skips": True,
                "algorithm": "evolutionary",
                "params": {"population": 16, "generations": 10},
                "citations": ["skip connections improve", "hidden dimension 64"]}),
    ]
    for revisions_used, meets_target, payload in review_entries:
        lines.append(record(
            "review-results",
            {"dataset": "toy-cora", "metric": "accuracy",
             "revisions_used": revisions_used, "meets_target": meets_target},
            payload))
    for revisions_used in report_revisions:
        lines.append(record(
            "compile-report",
            {"dataset": "toy-cora", "metric": "accuracy",
             "revisions_used": revisions_used},
            {"summary": "Evolutionary search settled on a compact architecture "
                        "for the citation graph."}))
    return lines


def main() -> None:
    base = extraction_records()

    accept = {"verdict": "accept", "hints": [],
              "rationale": "Search reached the configured target."}
    demo = base + pipeline_records(
        review_entries=[("0", "yes", accept), ("1", "yes", accept)],
        report_revisions=["0", "1"])
    (DEMO / "provider.jsonl").write_text("\n".join(demo) + "\n", encoding="utf-8")

    revise = {"verdict": "revise", "hints": ["widen-ops"],
              "rationale": "Best accuracy is below the target; widen the operator pool."}
    revise_fixture = base + pipeline_records(
        review_entries=[("0", "no", revise), ("1", "no", revise)],
        report_revisions=["0", "1"])
    (DEMO / "provider_revise.jsonl").write_text("\n".join(revise_fixture) + "\n",
                                                encoding="utf-8")
    print(f"wrote {DEMO / 'provider.jsonl'} and {DEMO / 'provider_revise.jsonl'}")


if __name__ == "__main__":
    main()

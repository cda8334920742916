"""Operator command line: ingest corpora, query stores, run pipelines,
inspect runs.

Exit codes: 0 success, 1 usage error, 2 runtime failure. With --machine
every output line is one structured JSON record; human output never mixes
into machine output (run progress goes to stderr in human mode).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import run_pipeline
from .config import build_embedder, build_provider, build_settings, load_config
from .errors import ArchonError
from .gateway import HashEmbedder, Transcript
from .knowledge import KnowledgeStore, RetrievalQuery, read_manifest
from .runfile import format_run_human, load_run, save_run


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _machine_print(record: dict) -> None:
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")


def _cmd_ingest(args) -> int:
    config = load_config(args.config)
    provider = build_provider(config)
    embedder = build_embedder(config)
    store_path = Path(args.store)
    store = (KnowledgeStore.snapshot_load(store_path, embedder=embedder)
             if store_path.exists() else KnowledgeStore(embedder=embedder))
    transcript = Transcript()
    docs = read_manifest(args.manifest)
    rows = []
    for doc in docs:
        item_ids = store.ingest_document(doc, provider, transcript)
        rows.append((doc.doc_id, len(item_ids)))
    store.snapshot_save(store_path)
    if args.machine:
        for doc_id, count in rows:
            _machine_print({"record": "ingest", "doc_id": doc_id, "items": count})
        _machine_print({"record": "summary", "docs": len(rows),
                        "items": sum(c for _, c in rows), "store": str(store_path)})
    else:
        for doc_id, count in rows:
            print(f"{doc_id}: {count} knowledge items")
        print(f"ingested {len(rows)} documents into {store_path} "
              f"({len(store)} items total)")
    return 0


def _cmd_query(args) -> int:
    embedder = HashEmbedder()
    if args.config:
        embedder = build_embedder(load_config(args.config))
    store = KnowledgeStore.snapshot_load(Path(args.store), embedder=embedder)
    ranked = store.retrieve(RetrievalQuery(args.text, args.stage,
                                           per_type_k=args.per_type_k, final_k=args.k))
    for rank, entry in enumerate(ranked.entries, start=1):
        item = store.get(entry.item_id)
        if args.machine:
            _machine_print({"record": "hit", "rank": rank, "item_id": entry.item_id,
                            "cosine": entry.cosine_score, "final": entry.final_score,
                            "facet_type": item.facet_type,
                            "resource_type": item.resource_type, "text": item.text})
        else:
            print(f"{rank}. {entry.item_id}  cosine={entry.cosine_score:.4f}  "
                  f"final={entry.final_score:.4f}  [{item.resource_type}/{item.facet_type}] "
                  f"{item.text}")
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config)

    def events(record: dict) -> None:
        if args.machine:
            _machine_print({"record": "event", **record})
        else:
            sys.stderr.write(f"[{record.get('event')}] "
                             + " ".join(f"{k}={v}" for k, v in record.items()
                                        if k != "event") + "\n")

    settings = build_settings(config, seed=args.seed, events=events)
    try:
        result = run_pipeline(args.instruction, settings)
    finally:
        close = getattr(settings.backend, "close", None)
        if close:
            close()
    if settings.update_experiment_kb:
        settings.experiment_store.snapshot_save(config.store_experiment)
    out_path = Path(args.out) if args.out else Path(f"{result.run_id}.run")
    save_run(out_path, result)
    if args.machine:
        _machine_print({"record": "run", "run_id": result.run_id,
                        "best_genotype": result.report.best_genotype,
                        "metric_mean": result.report.metric_mean,
                        "metric_std": result.report.metric_std,
                        "revisions_used": result.report.revisions_used,
                        "run_file": str(out_path)})
    else:
        print(format_run_human(load_run(out_path)))
        print(f"run file    : {out_path}")
    return 0


def _cmd_show_run(args) -> int:
    run = load_run(Path(args.run_file))
    if args.machine:
        _machine_print({"record": "run", **run})
    else:
        print(format_run_human(run))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="archon",
                     description="knowledge-guided GNN architecture design engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="ingest a document corpus into a store")
    p_ingest.add_argument("--config", required=True)
    p_ingest.add_argument("--manifest", required=True)
    p_ingest.add_argument("--store", required=True)
    p_ingest.add_argument("--machine", action="store_true")
    p_ingest.set_defaults(func=_cmd_ingest)

    p_query = sub.add_parser("query", help="query a knowledge store")
    p_query.add_argument("--store", required=True)
    p_query.add_argument("--text", required=True)
    p_query.add_argument("--stage", default="data-agent",
                         choices=("data-agent", "configuration-agent", "planning-review"))
    p_query.add_argument("--k", type=int, default=8)
    p_query.add_argument("--per-type-k", type=int, default=5, dest="per_type_k")
    p_query.add_argument("--config")
    p_query.add_argument("--machine", action="store_true")
    p_query.set_defaults(func=_cmd_query)

    p_run = sub.add_parser("run", help="run the design pipeline")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--instruction", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--machine", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_show = sub.add_parser("show-run", help="pretty-print a run file")
    p_show.add_argument("run_file")
    p_show.add_argument("--machine", action="store_true")
    p_show.set_defaults(func=_cmd_show_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ArchonError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

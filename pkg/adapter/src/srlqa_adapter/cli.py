"""Adapter command line: annotate | export-embeddings.

Outputs are written atomically (temp file, then rename)."""

from __future__ import annotations

import argparse
import os
import sys

from .annotate import ENGINE_TAG, AdapterError, annotate, canonical_json, load_captions
from .embed import (
    export_embeddings,
    load_prediction_texts,
    load_query_sentences,
    make_backend,
    write_store,
)


def _write_records(path, records) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_json(rec))
            fh.write("\n")
    os.replace(tmp, path)


def cmd_annotate(args, parser) -> int:
    if not os.path.exists(args.captions):
        parser.error(f"input not found: {args.captions}")
    if args.engine != "rule":
        parser.error(f"unknown engine {args.engine!r}")
    with open(args.captions, "r", encoding="utf-8") as fh:
        captions = load_captions(fh)
    descriptions, clusters = annotate(captions)
    _write_records(args.out_descriptions, descriptions)
    _write_records(args.out_clusters, clusters)
    print(f"engine: {ENGINE_TAG}")
    print(f"descriptions: {len(descriptions)}")
    print(f"frames: {sum(len(d['frames']) for d in descriptions)}")
    print(f"clusters: {len(clusters)}")
    return 0


def cmd_export(args, parser) -> int:
    if not os.path.exists(args.queries):
        parser.error(f"input not found: {args.queries}")
    if args.predictions and not os.path.exists(args.predictions):
        parser.error(f"input not found: {args.predictions}")
    backend = make_backend(args.backend, dim=args.dim, model=args.model)
    with open(args.queries, "r", encoding="utf-8") as fh:
        queries = load_query_sentences(fh)
    predictions = None
    if args.predictions:
        with open(args.predictions, "r", encoding="utf-8") as fh:
            predictions = load_prediction_texts(fh)
    bundles = export_embeddings(queries, predictions, backend)
    model_tag = args.model_tag or backend.model_tag
    write_store(args.out, model_tag, bundles)
    print(f"model_tag: {model_tag}")
    print(f"bundles: {len(bundles)}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srlqa-annotate",
        description="Annotate raw captions into interchange records and "
                    "export embedding stores for rendered sentences.")
    sub = parser.add_subparsers(dest="command", required=True)

    ann = sub.add_parser("annotate", help="captions -> descriptions + clusters")
    ann.add_argument("--captions", required=True)
    ann.add_argument("--out-descriptions", required=True)
    ann.add_argument("--out-clusters", required=True)
    ann.add_argument("--engine", default="rule")
    ann.set_defaults(func=cmd_annotate)

    exp = sub.add_parser("export-embeddings",
                         help="queries (+predictions) -> embedding store")
    exp.add_argument("--queries", required=True)
    exp.add_argument("--predictions")
    exp.add_argument("--out", required=True)
    exp.add_argument("--backend", default="hash", choices=("hash", "transformers"))
    exp.add_argument("--model", help="checkpoint name/path for the transformers backend")
    exp.add_argument("--model-tag", help="override the tag recorded in the store")
    exp.add_argument("--dim", type=int, default=32, help="hash backend dimension")
    exp.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()

"""Command-line surface: build | pair | score | report | baseline.

Every command is deterministic given identical inputs and configuration;
reports and record files are byte-stable across runs.  Exit codes: 0 on
success, 2 for usage problems (including missing input files), 1 for hard
errors while processing.
"""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter

from .builder import (
    BuildError,
    build_dataset,
    load_clusters,
    load_manifest,
)
from .config import DEFAULT_CONFIG, ToolkitConfig, load_config
from .contrastive import pair_eval_pool
from .corpus import (
    SchemaError,
    detokenize,
    load_descriptions,
    load_pairs,
    load_predictions,
    load_queries,
    load_scores,
    prediction_from_text,
    save_pairs,
    save_predictions,
    save_queries,
    save_scores,
    surfaces,
    write_records,
    canonical_json,
)
from .embeddings import EmbeddingStoreError, open_provider
from .metrics import EMBED_SIM
from .scoring import (
    MissingPredictionsError,
    aggregate,
    score_split,
)
from .corpus import SrlRole
from dataclasses import replace


def _require_inputs(parser: argparse.ArgumentParser, paths) -> None:
    for path in paths:
        if path is not None and not os.path.exists(path):
            parser.error(f"input not found: {path}")


def _load_toolkit_config(args, parser) -> ToolkitConfig:
    cfg = DEFAULT_CONFIG
    if getattr(args, "config", None):
        _require_inputs(parser, [args.config])
        cfg = load_config(args.config)
    if getattr(args, "roles", None):
        roles = frozenset(SrlRole.from_raw(r.strip()) for r in args.roles.split(",") if r.strip())
        cfg = replace(cfg, querygen=replace(cfg.querygen, considered_roles=roles))
    if getattr(args, "metrics", None):
        cfg = replace(cfg, metrics=tuple(m.strip() for m in args.metrics.split(",") if m.strip()))
    if getattr(args, "thresholds", None):
        t_cs = tuple(float(t) for t in args.thresholds.split(",") if t.strip())
        cfg = replace(cfg, thresholds=replace(cfg.thresholds, t_cs=t_cs))
    return cfg


# ---------------------------------------------------------------------------
# baselines

def baseline_predict(kind, train_queries, eval_queries):
    """Analytic predictors: the empty string, a gold-answer copy, or the
    per-role most frequent training answer (ties broken lexicographically)."""
    if kind == "empty":
        return [prediction_from_text(q.query_id, "") for q in eval_queries]
    if kind == "gt":
        return [prediction_from_text(q.query_id, detokenize(q.answer_tokens))
                for q in eval_queries]
    if kind == "most_frequent":
        if not train_queries:
            raise ValueError("the most_frequent baseline needs --train-queries")
        by_role: dict[str, Counter] = {}
        for q in train_queries:
            by_role.setdefault(q.masked_role.label, Counter())[surfaces(q.answer_tokens)] += 1
        best = {
            role: min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]
            for role, counter in by_role.items()
        }
        return [
            prediction_from_text(q.query_id, " ".join(best.get(q.masked_role.label, ())))
            for q in eval_queries
        ]
    raise ValueError(f"unknown baseline kind: {kind!r}")


# ---------------------------------------------------------------------------
# commands

def cmd_build(args, parser) -> int:
    _require_inputs(parser, [args.descriptions, args.clusters, args.manifest])
    cfg = _load_toolkit_config(args, parser)

    audit_head: list[dict] = []
    descriptions = load_descriptions(
        args.descriptions,
        on_warning=lambda w: audit_head.append({
            "kind": "parse_warning", "line": w.line_no, "segment_id": w.segment_id,
            "frame_index": w.frame_index, "reason": w.reason}))
    clusters = load_clusters(args.clusters) if args.clusters else []
    manifest = load_manifest(args.manifest)

    result = build_dataset(
        descriptions, clusters, cfg.querygen, manifest,
        pair_train=args.pair_train or cfg.pair_train)
    result.audit = audit_head + result.audit

    counts = [rec for rec in result.audit if rec["kind"] == "count"]
    warnings = [rec for rec in result.audit if rec["kind"] != "count"]
    for rec in counts:
        print(f"{rec['name']}: {rec['value']}")
    print(f"audit_records: {len(warnings)}")

    if args.dry_run:
        return 0
    os.makedirs(args.out_dir, exist_ok=True)
    save_queries(os.path.join(args.out_dir, "queries_train.jsonl"), result.train)
    save_queries(os.path.join(args.out_dir, "queries_val.jsonl"), result.val)
    save_queries(os.path.join(args.out_dir, "queries_test.jsonl"), result.test)
    save_pairs(os.path.join(args.out_dir, "pairs.jsonl"), result.pairs)
    if args.pair_train or cfg.pair_train:
        save_pairs(os.path.join(args.out_dir, "pairs_train.jsonl"), result.train_pairs)
    write_records(os.path.join(args.out_dir, "audit.jsonl"), result.audit)
    return 0


def cmd_pair(args, parser) -> int:
    _require_inputs(parser, [args.val, args.test, args.descriptions])
    cfg = _load_toolkit_config(args, parser)
    val = load_queries(args.val)
    test = load_queries(args.test) if args.test else []
    sources = {d.segment_id: d for d in load_descriptions(args.descriptions)}
    audit: list[dict] = []
    pairs, kept_val, kept_test = pair_eval_pool(
        val, test, sources, cfg.querygen,
        on_drop=lambda qid, split, reason: audit.append(
            {"kind": "query_dropped", "query_id": qid, "split": split, "reason": reason}))
    pairs.sort(key=lambda p: p.query_id_i)
    save_pairs(args.out_pairs, pairs)
    if args.out_val:
        save_queries(args.out_val, kept_val)
    if args.out_test:
        save_queries(args.out_test, kept_test)
    if args.out_audit:
        write_records(args.out_audit, audit)
    print(f"pairs: {len(pairs)}")
    print(f"kept_val: {len(kept_val)}")
    print(f"kept_test: {len(kept_test)}")
    print(f"dropped: {len(audit)}")
    return 0


def cmd_score(args, parser) -> int:
    _require_inputs(parser, list(args.queries) + [args.pairs] + list(args.predictions)
                    + list(args.partner_queries or []))
    cfg = _load_toolkit_config(args, parser)

    queries = []
    for path in args.queries:
        queries.extend(load_queries(path))
    partner_queries = []
    for path in args.partner_queries or []:
        partner_queries.extend(load_queries(path))
    pairs = load_pairs(args.pairs) if args.pairs else []
    predictions = []
    for path in args.predictions:
        predictions.extend(load_predictions(path))

    store = None
    metrics = cfg.metrics
    if args.embeddings:
        if not args.embeddings.startswith(("http://", "https://")):
            _require_inputs(parser, [args.embeddings])
        store = open_provider(args.embeddings)
        if not args.metrics and EMBED_SIM not in metrics:
            metrics = metrics + (EMBED_SIM,)
    elif EMBED_SIM in metrics:
        parser.error("EMBED_SIM requires --embeddings <path|url>")

    drops: list[dict] = []
    records = score_split(
        queries, pairs, predictions, metrics, cfg.thresholds,
        store=store, config=cfg.metric_config, partner_queries=partner_queries,
        cs_gate_metric_self=cfg.cs_gate_metric_self,
        consistency_on_clamped=cfg.consistency_on_clamped,
        on_drop=lambda qid, metric, reason: drops.append(
            {"kind": "score_dropped", "query_id": qid, "metric": metric, "reason": reason}))
    save_scores(args.out, records)
    if args.audit:
        write_records(args.audit, drops)
    elif drops:
        print(f"dropped {len(drops)} (query, metric) scores as degenerate", file=sys.stderr)
    print(f"scored: {len(records)} records over {len(queries)} queries")
    return 0


_REPORT_LABELS = {"direct": "Direct", "relative": "Rel"}


def _fmt_cell(value) -> str:
    return f"{value:9.4f}" if value is not None else f"{'-':>9}"


def render_text_report(rows) -> str:
    order: list[str] = []
    by_metric: dict[str, list[dict]] = {}
    for row in rows:
        if row["metric"] not in by_metric:
            order.append(row["metric"])
        by_metric.setdefault(row["metric"], []).append(row)

    lines = []
    for metric in order:
        mrows = by_metric[metric]
        groups = [r["group"] for r in mrows]
        cs_ts = sorted({t for r in mrows for t in r["contrastive"]})
        cons_ts = sorted({t for r in mrows for t in r["consistency"]})
        lines.append(f"== {metric} ==")
        lines.append(" " * 10 + "".join(f"{g:>9}" for g in groups))
        lines.append(f"{'n':<10}" + "".join(f"{r['n']:9d}" for r in mrows))
        lines.append(f"{'paired':<10}" + "".join(f"{r['n_paired']:9d}" for r in mrows))
        for key, label in _REPORT_LABELS.items():
            lines.append(f"{label:<10}" + "".join(_fmt_cell(r[key]) for r in mrows))
        for t in cs_ts:
            label = f"CS@{t:g}"
            lines.append(f"{label:<10}"
                         + "".join(_fmt_cell(r["contrastive"].get(t)) for r in mrows))
        for t in cons_ts:
            label = f"Cons@{t:g}"
            lines.append(f"{label:<10}"
                         + "".join(_fmt_cell(r["consistency"].get(t)) for r in mrows))
        lines.append("")
    return "\n".join(lines)


def report_records(rows) -> list[dict]:
    out = []
    for row in rows:
        rec = dict(row)
        rec["contrastive"] = {format(t, "g"): v for t, v in row["contrastive"].items()}
        rec["consistency"] = {format(t, "g"): v for t, v in row["consistency"].items()}
        out.append(rec)
    return out


def cmd_report(args, parser) -> int:
    _require_inputs(parser, [args.scores] + list(args.queries))
    records = load_scores(args.scores)
    queries = []
    for path in args.queries:
        queries.extend(load_queries(path))
    rows = aggregate(records, queries)
    if args.format == "records":
        text = "".join(canonical_json(rec) + "\n" for rec in report_records(rows))
    else:
        text = render_text_report(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_baseline(args, parser) -> int:
    _require_inputs(parser, [args.queries, args.train_queries])
    eval_queries = load_queries(args.queries)
    train_queries = load_queries(args.train_queries) if args.train_queries else []
    predictions = baseline_predict(args.kind, train_queries, eval_queries)
    save_predictions(args.out, predictions)
    print(f"wrote {len(predictions)} predictions")
    return 0


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srlqa",
        description="Generate fill-in-the-phrase queries from role-labeled "
                    "descriptions and score free-form answers relatively and "
                    "contrastively.")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="run the full dataset pipeline")
    build.add_argument("--descriptions", required=True)
    build.add_argument("--clusters", required=True)
    build.add_argument("--manifest", required=True)
    build.add_argument("--out-dir", required=True)
    build.add_argument("--config")
    build.add_argument("--roles", help="comma-separated considered roles (must include V)")
    build.add_argument("--pair-train", action="store_true")
    build.add_argument("--dry-run", action="store_true", help="print counts, write nothing")
    build.add_argument("--seed", type=int, default=0,
                       help="reserved; the pipeline is deterministic")
    build.set_defaults(func=cmd_build)

    pair = sub.add_parser("pair", help="pair an existing val/test query pool")
    pair.add_argument("--val", required=True)
    pair.add_argument("--test")
    pair.add_argument("--descriptions", required=True)
    pair.add_argument("--config")
    pair.add_argument("--roles")
    pair.add_argument("--out-pairs", required=True)
    pair.add_argument("--out-val")
    pair.add_argument("--out-test")
    pair.add_argument("--out-audit")
    pair.set_defaults(func=cmd_pair)

    score = sub.add_parser("score", help="score predictions against queries")
    score.add_argument("--queries", action="append", required=True)
    score.add_argument("--partner-queries", action="append", default=[],
                       help="extra queries available as partners but not scored")
    score.add_argument("--pairs")
    score.add_argument("--predictions", action="append", required=True)
    score.add_argument("--metrics", help="comma-separated metric ids")
    score.add_argument("--thresholds", help="comma-separated contrastive thresholds")
    score.add_argument("--embeddings", help="embedding store path or service url")
    score.add_argument("--config")
    score.add_argument("--out", required=True)
    score.add_argument("--audit", help="write degenerate-query drops here")
    score.add_argument("--seed", type=int, default=0,
                       help="reserved; scoring is deterministic")
    score.set_defaults(func=cmd_score)

    report = sub.add_parser("report", help="aggregate a scores file into tables")
    report.add_argument("--scores", required=True)
    report.add_argument("--queries", action="append", required=True)
    report.add_argument("--format", choices=("text", "records"), default="text")
    report.add_argument("--out")
    report.set_defaults(func=cmd_report)

    baseline = sub.add_parser("baseline", help="emit an analytic baseline predictor")
    baseline.add_argument("--kind", required=True, choices=("empty", "gt", "most_frequent"))
    baseline.add_argument("--queries", required=True)
    baseline.add_argument("--train-queries")
    baseline.add_argument("--out", required=True)
    baseline.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (SchemaError, BuildError, MissingPredictionsError,
            EmbeddingStoreError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()

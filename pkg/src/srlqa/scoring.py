"""Relative, contrastive and consistency scoring plus report aggregation.

The relative score measures a prediction's improvement over the empty
string, normalized by the gap between the reference's own score and the
empty-string score:

    rel = (B(Ref, Hyp) - B(Ref, Base)) / (B(Ref, Ref) - B(Ref, Base))

with Ref/Hyp/Base being the query rendered with the gold answer, the
prediction, and nothing.  The denominator uses the actually computed
B(Ref, Ref), so a perfect prediction scores exactly 1 for every metric,
including those whose self-score is not 1.

The contrastive score gates a sample's relative score on its partner
clearing a threshold, clamped at zero:

    cs = max(s_i * [s_j > t * self_ref_j], 0)

and consistency flags whether both samples fall on the same side of a
threshold:

    cons = [(s_i - t) * (s_j - t) > 0]
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .corpus import (
    ContrastivePair,
    PredictionRecord,
    QueryRecord,
    ScoreRecord,
    Token,
    render,
)
from .metrics import (
    BLEU2,
    CIDER_D,
    EMBED_SIM,
    METEOR_LITE,
    METRIC_IDS,
    ROUGE_L,
    DEFAULT_METRIC_CONFIG,
    IdfTable,
    MetricConfig,
    bleu2,
    build_idf,
    cider_d,
    embed_sim,
    meteor_lite,
    rouge_l,
    self_score,
)

DEGENERATE_EPS = 1e-12

ROLE_ORDER = ("ARG0", "V", "ARG1", "ARG2", "LOC")
OVERALL = "Overall"


class DegenerateQueryError(ValueError):
    """B(Ref, Ref) and B(Ref, Base) coincide, so the relative score is
    undefined for this query and metric."""

    def __init__(self, query_id: str, metric: str):
        super().__init__(f"degenerate denominator for query {query_id} under {metric}")
        self.query_id = query_id
        self.metric = metric


class MissingPredictionsError(ValueError):
    def __init__(self, query_ids: Sequence[str]):
        self.query_ids = sorted(query_ids)
        listed = ", ".join(self.query_ids[:20])
        more = "" if len(self.query_ids) <= 20 else f" (+{len(self.query_ids) - 20} more)"
        super().__init__(f"missing predictions for: {listed}{more}")


@dataclass(frozen=True)
class Thresholds:
    t_cs: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3)
    t_cons: float = 0.1

    def __post_init__(self):
        for t in (*self.t_cs, self.t_cons):
            if not 0.0 <= t < 1.0:
                raise ValueError(f"thresholds must lie in [0, 1): {t}")


def apply_metric(
    metric: str,
    ref: Sequence[Token],
    hyp: Sequence[Token],
    idf: Optional[IdfTable] = None,
    store=None,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    if metric == BLEU2:
        return bleu2(ref, hyp, epsilon=config.bleu_epsilon)
    if metric == ROUGE_L:
        return rouge_l(ref, hyp, beta=config.rouge_beta)
    if metric == METEOR_LITE:
        return meteor_lite(
            ref, hyp,
            alpha=config.meteor_alpha, gamma=config.meteor_gamma, beta=config.meteor_beta)
    if metric == CIDER_D:
        return cider_d(ref, hyp, idf, max_n=config.cider_max_n, sigma=config.cider_sigma)
    if metric == EMBED_SIM:
        if store is None:
            raise ValueError("EMBED_SIM needs an embedding provider")
        return embed_sim(ref, hyp, store, idf=idf, baseline=config.embed_baseline)
    raise ValueError(f"unknown metric: {metric!r}")


def relative_score(
    metric: str,
    query: QueryRecord,
    a_gt: Sequence[Token],
    a_pred: Sequence[Token],
    idf: Optional[IdfTable] = None,
    store=None,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """Relative improvement of the prediction over the empty string; exactly
    1 for the gold answer, exactly 0 for an empty prediction, possibly
    negative for predictions worse than saying nothing."""
    if not a_gt:
        raise ValueError("gold answer must be non-empty")
    ref = render(query, a_gt)
    hyp = render(query, a_pred)
    base = render(query, ())
    s_self = apply_metric(metric, ref, ref, idf, store, config)
    s_base = apply_metric(metric, ref, base, idf, store, config)
    denominator = s_self - s_base
    if abs(denominator) < DEGENERATE_EPS:
        raise DegenerateQueryError(query.query_id, metric)
    s_hyp = apply_metric(metric, ref, hyp, idf, store, config)
    return (s_hyp - s_base) / denominator


def contrastive_score(s_i: float, s_j: float, self_ref_j: float, t: float) -> float:
    """Gate s_i on the partner clearing t (scaled by the partner's
    self-score); the max keeps the result non-negative."""
    gate = 1.0 if s_j > t * self_ref_j else 0.0
    return max(s_i * gate, 0.0)


def consistency(s_i: float, s_j: float, t_cons: float) -> int:
    """1 iff both scores sit strictly on the same side of the threshold;
    a score exactly on the threshold counts as inconsistent."""
    return 1 if (s_i - t_cons) * (s_j - t_cons) > 0.0 else 0


def score_split(
    queries: Sequence[QueryRecord],
    pairs: Sequence[ContrastivePair],
    predictions: Sequence[PredictionRecord],
    metrics: Sequence[str] = METRIC_IDS,
    thresholds: Thresholds = Thresholds(),
    *,
    store=None,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
    partner_queries: Sequence[QueryRecord] = (),
    cs_gate_metric_self: bool = False,
    consistency_on_clamped: bool = False,
    on_drop: Optional[Callable[[str, str, str], None]] = None,
) -> list[ScoreRecord]:
    """One ScoreRecord per (query, metric).

    Partner scores come from the partner's own prediction; predictions must
    cover every scored query and every referenced partner.  The idf corpus
    is the rendered gold reference of every scored query.  Queries whose
    relative score is degenerate for a metric are excluded from that
    metric's records and reported through ``on_drop``.

    ``cs_gate_metric_self`` switches the contrastive gate from the relative
    scale (self = 1) to the partner's raw metric self-score;
    ``consistency_on_clamped`` feeds zero-clamped relative scores into the
    consistency check instead of raw ones.
    """
    by_id = {q.query_id: q for q in queries}
    pool = dict(by_id)
    for q in partner_queries:
        pool.setdefault(q.query_id, q)
    partner_of = {}
    for pair in pairs:
        if pair.query_id_i in by_id:
            if pair.query_id_j not in pool:
                raise ValueError(
                    f"pair partner {pair.query_id_j} of {pair.query_id_i} is not in the pool")
            partner_of[pair.query_id_i] = pair.query_id_j

    preds = {p.query_id: p for p in predictions}
    needed = set(by_id) | set(partner_of.values())
    missing = needed - set(preds)
    if missing:
        raise MissingPredictionsError(sorted(missing))

    idf = build_idf([render(q, q.answer_tokens) for q in queries], max_n=config.cider_max_n)

    rel_cache: dict[tuple[str, str], Optional[float]] = {}

    def rel(metric: str, q: QueryRecord) -> Optional[float]:
        cache_key = (metric, q.query_id)
        if cache_key not in rel_cache:
            try:
                value = relative_score(
                    metric, q, q.answer_tokens, preds[q.query_id].answer_tokens,
                    idf=idf, store=store, config=config)
            except DegenerateQueryError:
                value = None
            rel_cache[cache_key] = value
        return rel_cache[cache_key]

    records: list[ScoreRecord] = []
    for q in queries:
        for metric in metrics:
            s_i = rel(metric, q)
            if s_i is None:
                if on_drop is not None:
                    on_drop(q.query_id, metric, "degenerate_denominator")
                continue
            direct = apply_metric(
                metric, q.answer_tokens, preds[q.query_id].answer_tokens, idf, store, config)
            cs: dict[float, float] = {}
            cons: dict[float, int] = {}
            partner_id = partner_of.get(q.query_id)
            if partner_id is not None:
                partner = pool[partner_id]
                s_j = rel(metric, partner)
                if s_j is None:
                    if on_drop is not None:
                        on_drop(q.query_id, metric, "degenerate_partner")
                    continue
                if cs_gate_metric_self:
                    self_j = self_score(metric, render(partner, partner.answer_tokens), idf, config)
                else:
                    self_j = 1.0
                for t in thresholds.t_cs:
                    cs[t] = contrastive_score(s_i, s_j, self_j, t)
                if consistency_on_clamped:
                    cons_i, cons_j = max(s_i, 0.0), max(s_j, 0.0)
                else:
                    cons_i, cons_j = s_i, s_j
                cons[thresholds.t_cons] = consistency(cons_i, cons_j, thresholds.t_cons)
            records.append(ScoreRecord(
                query_id=q.query_id,
                metric=metric,
                direct=direct,
                relative=s_i,
                contrastive=cs,
                consistency=cons,
            ))
    return records


# ---------------------------------------------------------------------------
# aggregation

def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def aggregate(records: Sequence[ScoreRecord], queries: Sequence[QueryRecord]) -> list[dict]:
    """Unweighted means grouped by (metric, masked role) plus an Overall
    group per metric.  Contrastive/consistency means run over paired
    queries only.  Returns one plain dict per group, ready for the records
    report format."""
    role_of = {q.query_id: q.masked_role.label for q in queries}
    by_metric: dict[str, list[ScoreRecord]] = {}
    for rec in records:
        by_metric.setdefault(rec.metric, []).append(rec)

    metric_order = [m for m in METRIC_IDS if m in by_metric]
    metric_order += sorted(set(by_metric) - set(metric_order))

    rows: list[dict] = []
    for metric in metric_order:
        recs = by_metric[metric]
        groups: dict[str, list[ScoreRecord]] = {}
        for rec in recs:
            groups.setdefault(role_of.get(rec.query_id, "?"), []).append(rec)
        group_order = [r for r in ROLE_ORDER if r in groups]
        group_order += sorted(set(groups) - set(group_order))
        for group in group_order + [OVERALL]:
            members = recs if group == OVERALL else groups[group]
            paired = [r for r in members if r.contrastive]
            thresholds = sorted({t for r in paired for t in r.contrastive})
            cons_ts = sorted({t for r in paired for t in r.consistency})
            rows.append({
                "metric": metric,
                "group": group,
                "n": len(members),
                "n_paired": len(paired),
                "direct": _mean([r.direct for r in members]),
                "relative": _mean([r.relative for r in members]),
                "contrastive": {
                    t: _mean([r.contrastive[t] for r in paired]) for t in thresholds},
                "consistency": {
                    t: _mean([r.consistency[t] for r in paired]) for t in cons_ts},
            })
    return rows

"""Base phrase/sentence metrics, each a pure function of token sequences.

All scorers take sequences of :class:`~srlqa.corpus.Token`, raise on an
empty reference and return 0.0 for an empty hypothesis.  The n-gram
metrics compare surfaces only; the meteor variant additionally aligns on
lemmas; the embedding metric consumes per-token vectors from a provider
object (see :mod:`srlqa.embeddings`).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .corpus import Token

BLEU2 = "BLEU2"
ROUGE_L = "ROUGE_L"
METEOR_LITE = "METEOR_LITE"
CIDER_D = "CIDER_D"
EMBED_SIM = "EMBED_SIM"

METRIC_IDS = (BLEU2, ROUGE_L, METEOR_LITE, CIDER_D, EMBED_SIM)

#: Metrics whose reference-vs-reference score is the constant 1.
UNIT_SELF_METRICS = frozenset({BLEU2, ROUGE_L, METEOR_LITE, EMBED_SIM})


@dataclass(frozen=True)
class MetricConfig:
    """Every constant is overridable from the config file."""

    bleu_epsilon: float = 1e-9
    rouge_beta: float = 1.2
    meteor_alpha: float = 0.9
    meteor_gamma: float = 0.5
    meteor_beta: float = 3.0
    cider_max_n: int = 4
    cider_sigma: float = 6.0
    embed_baseline: float = 0.0


DEFAULT_METRIC_CONFIG = MetricConfig()


def _surfaces(tokens: Sequence[Token]) -> list[str]:
    return [t.surface for t in tokens]


def _ngrams(items: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(items[i:i + n]) for i in range(len(items) - n + 1)]


def _check_ref(ref: Sequence[Token]) -> None:
    if not ref:
        raise ValueError("empty reference")


# ---------------------------------------------------------------------------
# idf

@dataclass(frozen=True)
class IdfTable:
    """Inverse document frequencies over a reference corpus, n = 1..max_n.

    ``weight(g) = log(max(1, N / df(g)))`` and an unseen n-gram weighs
    ``log(N)``; with a single-document corpus every weight degenerates
    to 0.
    """

    corpus_size: int
    doc_freq: Mapping[tuple[str, ...], int]
    max_n: int = 4

    def weight(self, ngram: tuple[str, ...]) -> float:
        df = self.doc_freq.get(ngram, 0)
        if df <= 0:
            return math.log(self.corpus_size)
        return math.log(max(1.0, self.corpus_size / df))


def build_idf(sentences: Sequence[Sequence[Token]], max_n: int = 4) -> IdfTable:
    """Document frequency counts one occurrence per sentence per n-gram."""
    sents = list(sentences)
    if not sents:
        raise ValueError("empty reference corpus")
    doc_freq: dict[tuple[str, ...], int] = {}
    for sent in sents:
        words = _surfaces(sent)
        seen = set()
        for n in range(1, max_n + 1):
            seen.update(_ngrams(words, n))
        for g in seen:
            doc_freq[g] = doc_freq.get(g, 0) + 1
    return IdfTable(corpus_size=len(sents), doc_freq=doc_freq, max_n=max_n)


# ---------------------------------------------------------------------------
# BLEU-2

def bleu2(ref: Sequence[Token], hyp: Sequence[Token], epsilon: float = 1e-9) -> float:
    """Sentence-level BLEU with n up to 2.

    Geometric mean of clipped unigram/bigram precision times the brevity
    penalty exp(min(0, 1 - |ref|/|hyp|)).  Zero precisions are replaced by
    ``epsilon`` so short phrases don't collapse the geometric mean.
    """
    _check_ref(ref)
    if not hyp:
        return 0.0
    ref_words = _surfaces(ref)
    hyp_words = _surfaces(hyp)
    log_sum = 0.0
    for n in (1, 2):
        ref_counts = Counter(_ngrams(ref_words, n))
        hyp_counts = Counter(_ngrams(hyp_words, n))
        total = max(len(hyp_words) - n + 1, 0)
        matched = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        precision = matched / total if total > 0 else 0.0
        if precision <= 0.0:
            precision = epsilon
        log_sum += math.log(precision)
    brevity = math.exp(min(0.0, 1.0 - len(ref_words) / len(hyp_words)))
    return brevity * math.exp(log_sum / 2.0)


# ---------------------------------------------------------------------------
# ROUGE-L

def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(ref: Sequence[Token], hyp: Sequence[Token], beta: float = 1.2) -> float:
    """Longest-common-subsequence F-measure with recall weight ``beta``."""
    _check_ref(ref)
    if not hyp:
        return 0.0
    lcs = _lcs_length(_surfaces(ref), _surfaces(hyp))
    if lcs == 0:
        return 0.0
    recall = lcs / len(ref)
    precision = lcs / len(hyp)
    b2 = beta * beta
    return (1.0 + b2) * recall * precision / (recall + b2 * precision)


# ---------------------------------------------------------------------------
# meteor (lite)

def _align(ref: Sequence[Token], hyp: Sequence[Token]) -> list[tuple[int, int]]:
    """Greedy one-to-one alignment: exact surface first, then exact lemma.

    Hypothesis tokens are visited left to right and take the leftmost
    unmatched reference token, which keeps the alignment deterministic.
    Returns (hyp_index, ref_index) pairs sorted by hyp_index.
    """
    ref_taken = [False] * len(ref)
    hyp_taken = [False] * len(hyp)
    matches: list[tuple[int, int]] = []
    for key in (lambda t: t.surface, lambda t: t.lemma):
        for j, h in enumerate(hyp):
            if hyp_taken[j]:
                continue
            target = key(h)
            for i, r in enumerate(ref):
                if not ref_taken[i] and key(r) == target:
                    matches.append((j, i))
                    ref_taken[i] = True
                    hyp_taken[j] = True
                    break
    matches.sort()
    return matches


def _chunk_count(matches: Sequence[tuple[int, int]]) -> int:
    chunks = 0
    prev = None
    for hyp_i, ref_i in matches:
        if prev is None or hyp_i != prev[0] + 1 or ref_i != prev[1] + 1:
            chunks += 1
        prev = (hyp_i, ref_i)
    return chunks


def meteor_lite(
    ref: Sequence[Token],
    hyp: Sequence[Token],
    alpha: float = 0.9,
    gamma: float = 0.5,
    beta: float = 3.0,
) -> float:
    """Unigram-alignment score with a fragmentation penalty.

    F_mean = P*R / (alpha*P + (1-alpha)*R) over exact+lemma matches, scaled
    by 1 - gamma*(chunks/matches)**beta.  A fully contiguous exact match
    still pays the one-chunk penalty, so identity scores approach (but do
    not equal) 1.
    """
    _check_ref(ref)
    if not hyp:
        return 0.0
    matches = _align(ref, hyp)
    m = len(matches)
    if m == 0:
        return 0.0
    precision = m / len(hyp)
    recall = m / len(ref)
    f_mean = precision * recall / (alpha * precision + (1.0 - alpha) * recall)
    penalty = gamma * (_chunk_count(matches) / m) ** beta
    return f_mean * (1.0 - penalty)


# ---------------------------------------------------------------------------
# CIDEr-D (single reference)

def cider_d(
    ref: Sequence[Token],
    hyp: Sequence[Token],
    idf: IdfTable,
    max_n: int = 4,
    sigma: float = 6.0,
) -> float:
    """Mean over n = 1..max_n of 10x the idf-weighted n-gram similarity.

    Hypothesis counts are clipped to the reference's in the numerator while
    norms stay unclipped; each n level is scaled by the Gaussian length
    penalty exp(-(|ref|-|hyp|)^2 / (2*sigma^2)).  The reference-vs-reference
    value is not 1 (it is 10 per n level with a nonzero vector).
    """
    _check_ref(ref)
    if idf is None:
        raise ValueError("cider_d requires an idf table")
    if not hyp:
        return 0.0
    ref_words = _surfaces(ref)
    hyp_words = _surfaces(hyp)
    delta = len(ref_words) - len(hyp_words)
    penalty = math.exp(-(delta * delta) / (2.0 * sigma * sigma))
    total = 0.0
    for n in range(1, max_n + 1):
        ref_vec = {g: c * idf.weight(g) for g, c in Counter(_ngrams(ref_words, n)).items()}
        hyp_vec = {g: c * idf.weight(g) for g, c in Counter(_ngrams(hyp_words, n)).items()}
        norm_ref = math.sqrt(sum(v * v for v in ref_vec.values()))
        norm_hyp = math.sqrt(sum(v * v for v in hyp_vec.values()))
        if norm_ref == 0.0 or norm_hyp == 0.0:
            continue
        dot = sum(min(v, ref_vec.get(g, 0.0)) * ref_vec.get(g, 0.0) for g, v in hyp_vec.items())
        total += dot / (norm_ref * norm_hyp) * penalty
    return 10.0 * total / max_n


# ---------------------------------------------------------------------------
# embedding similarity (greedy matching)

def _weighted_mean(best: Sequence[float], tokens: Sequence[Token], idf: Optional[IdfTable]) -> float:
    if idf is not None:
        weights = [idf.weight((t.surface,)) for t in tokens]
        total = sum(weights)
        if total <= 0.0:
            weights = [1.0] * len(tokens)
            total = float(len(tokens))
    else:
        weights = [1.0] * len(tokens)
        total = float(len(tokens))
    return float(sum(w * b for w, b in zip(weights, best)) / total)


def embed_sim(
    ref: Sequence[Token],
    hyp: Sequence[Token],
    store,
    idf: Optional[IdfTable] = None,
    baseline: float = 0.0,
) -> float:
    """Greedy-matching contextual similarity with idf weighting.

    Recall takes, for each reference token, the best cosine against any
    hypothesis token (precision symmetrically), each side averaged with
    unigram idf weights; the F-score is rescaled by ``baseline`` when one
    is configured.  ``store`` must expose ``vectors_for(tokens)`` returning
    one unit vector per token.
    """
    _check_ref(ref)
    if not hyp:
        return 0.0
    ref_vecs = store.vectors_for(ref)
    hyp_vecs = store.vectors_for(hyp)
    sims = ref_vecs @ hyp_vecs.T
    recall = _weighted_mean(sims.max(axis=1), ref, idf)
    precision = _weighted_mean(sims.max(axis=0), hyp, idf)
    if precision + recall == 0.0:
        return 0.0
    f_score = 2.0 * precision * recall / (precision + recall)
    if baseline != 0.0:
        f_score = (f_score - baseline) / (1.0 - baseline)
    return float(f_score)


# ---------------------------------------------------------------------------
# self-score

def self_score(
    metric: str,
    ref: Sequence[Token],
    idf: Optional[IdfTable] = None,
    config: MetricConfig = DEFAULT_METRIC_CONFIG,
) -> float:
    """B(ref, ref): the constant 1 for the unit metrics, computed for CIDEr."""
    if metric in UNIT_SELF_METRICS:
        return 1.0
    if metric == CIDER_D:
        return cider_d(ref, ref, idf, max_n=config.cider_max_n, sigma=config.cider_sigma)
    raise ValueError(f"unknown metric: {metric!r}")

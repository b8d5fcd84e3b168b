"""Lemma-keyed index over queries and contrastive-partner retrieval.

Two queries can serve as contrastive partners when they share the same
role structure, the same masked role and the same multiset of question
lemmas, but come from different videos and have disjoint answer key
lemmas.  Partner search is deterministic: candidates are scanned in
query-id order and the smallest qualifying id wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .corpus import NOUN, VERB, AnnotatedDescription, ContrastivePair, QueryRecord
from .querygen import QueryGenConfig, restrict_frame

IndexKey = tuple  # (structure, masked_role, question_lemmas)


@dataclass(frozen=True)
class QuerySignature:
    """What must match (structure, masked role, question lemmas) and what
    must differ (answer key lemmas) between contrastive partners."""

    structure: tuple[str, ...]
    masked_role: str
    question_lemmas: tuple[tuple[str, str], ...]
    answer_key_lemmas: frozenset[str]

    @property
    def key(self) -> IndexKey:
        return (self.structure, self.masked_role, self.question_lemmas)

    @property
    def indexable(self) -> bool:
        return bool(self.answer_key_lemmas)


@dataclass(frozen=True)
class IndexEntry:
    query_id: str
    video_id: str
    signature: QuerySignature


def signature(
    query: QueryRecord,
    source: AnnotatedDescription,
    cfg: Optional[QueryGenConfig] = None,
) -> QuerySignature:
    """Compute a query's signature from its source description.

    Question lemmas are the (lemma, pos) pairs of NOUN/VERB tokens inside
    the unmasked restricted role spans, sorted into a canonical multiset;
    tokens of the masked role contribute nothing.  Answer key lemmas are
    the answer's NOUN lemmas (VERB lemmas for verb queries); a query whose
    answer has none is unindexable.
    """
    cfg = cfg if cfg is not None else QueryGenConfig()
    frame = source.frames[query.frame_index]
    restricted = restrict_frame(frame, cfg)
    structure = tuple(span.role.label for span in restricted.roles)
    question_lemmas: list[tuple[str, str]] = []
    for span in restricted.roles:
        if span.role == query.masked_role:
            continue
        for tok in source.tokens[span.start:span.end]:
            if tok.coarse_pos in (NOUN, VERB):
                question_lemmas.append((tok.lemma, tok.coarse_pos))
    key_pos = VERB if query.masked_role.label == "V" else NOUN
    answer_key_lemmas = frozenset(
        tok.lemma for tok in query.answer_tokens if tok.coarse_pos == key_pos)
    return QuerySignature(
        structure=structure,
        masked_role=query.masked_role.label,
        question_lemmas=tuple(sorted(question_lemmas)),
        answer_key_lemmas=answer_key_lemmas,
    )


def make_entries(
    queries: Sequence[QueryRecord],
    sources: Mapping[str, AnnotatedDescription],
    cfg: Optional[QueryGenConfig] = None,
    on_unindexable: Optional[Callable[[str], None]] = None,
) -> list[IndexEntry]:
    """Signature every query; unindexable ones are skipped and reported."""
    entries = []
    for q in queries:
        sig = signature(q, sources[q.segment_id], cfg)
        if not sig.indexable:
            if on_unindexable is not None:
                on_unindexable(q.query_id)
            continue
        entries.append(IndexEntry(query_id=q.query_id, video_id=q.video_id, signature=sig))
    return entries


def build_index(entries: Iterable[IndexEntry]) -> dict[IndexKey, list[IndexEntry]]:
    """Group entries by signature key; postings are sorted by query_id."""
    index: dict[IndexKey, list[IndexEntry]] = {}
    for entry in entries:
        index.setdefault(entry.signature.key, []).append(entry)
    for postings in index.values():
        postings.sort(key=lambda e: e.query_id)
    return index


def find_partner(index: Mapping[IndexKey, list[IndexEntry]], entry: IndexEntry) -> Optional[str]:
    """Smallest query_id in the entry's posting list that comes from a
    different video and has answer key lemmas disjoint from the entry's."""
    for cand in index.get(entry.signature.key, ()):
        if cand.query_id == entry.query_id:
            continue
        if cand.video_id == entry.video_id:
            continue
        if cand.signature.answer_key_lemmas & entry.signature.answer_key_lemmas:
            continue
        return cand.query_id
    return None


def pair_eval_pool(
    val_queries: Sequence[QueryRecord],
    test_queries: Sequence[QueryRecord],
    sources: Mapping[str, AnnotatedDescription],
    cfg: Optional[QueryGenConfig] = None,
    on_drop: Optional[Callable[[str, str, str], None]] = None,
) -> tuple[list[ContrastivePair], list[QueryRecord], list[QueryRecord]]:
    """Pair every val/test query against the union of both splits.

    Queries that are unindexable or find no partner are dropped from their
    split; ``on_drop(query_id, split, reason)`` reports each drop.  Returns
    (pairs, kept_val, kept_test) with one pair per kept query.
    """
    split_of = {q.query_id: "val" for q in val_queries}
    split_of.update({q.query_id: "test" for q in test_queries})
    pool = list(val_queries) + list(test_queries)

    entry_of: dict[str, IndexEntry] = {}

    def _unindexable(query_id: str) -> None:
        if on_drop is not None:
            on_drop(query_id, split_of[query_id], "unindexable")

    entries = make_entries(pool, sources, cfg, on_unindexable=_unindexable)
    for entry in entries:
        entry_of[entry.query_id] = entry
    index = build_index(entries)

    pairs: list[ContrastivePair] = []
    kept_val: list[QueryRecord] = []
    kept_test: list[QueryRecord] = []
    for q in pool:
        entry = entry_of.get(q.query_id)
        if entry is None:
            continue
        partner = find_partner(index, entry)
        if partner is None:
            if on_drop is not None:
                on_drop(q.query_id, split_of[q.query_id], "no_partner")
            continue
        pairs.append(ContrastivePair(query_id_i=q.query_id, query_id_j=partner))
        (kept_val if split_of[q.query_id] == "val" else kept_test).append(q)
    return pairs, kept_val, kept_test

"""Query generation: one fill-in-the-phrase query per (frame, role).

A verb frame is first restricted to the configured role set, then filtered
for ambiguity (too few roles) and for stopword verbs.  Each surviving role
yields one query whose placeholder replaces that role's span; the query
text is the contiguous token range covered by the restricted frame, so
auxiliaries and particles between role spans are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import (
    CORE_ROLE_LABELS,
    AnnotatedDescription,
    Placeholder,
    QueryRecord,
    SrlRole,
    Token,
    VerbFrame,
)

#: Verbs too generic to anchor a query.
DEFAULT_STOPWORD_VERB_LEMMAS = frozenset(
    {"be", "start", "end", "begin", "stop", "lead", "demonstrate", "do"})

DEFAULT_CONSIDERED_ROLES = frozenset(SrlRole(label) for label in CORE_ROLE_LABELS)


@dataclass(frozen=True)
class QueryGenConfig:
    considered_roles: frozenset[SrlRole] = DEFAULT_CONSIDERED_ROLES
    min_roles: int = 3
    stopword_verb_lemmas: frozenset[str] = DEFAULT_STOPWORD_VERB_LEMMAS

    def __post_init__(self):
        if self.min_roles < 2:
            raise ValueError("min_roles must be >= 2")
        if SrlRole("V") not in self.considered_roles:
            raise ValueError("considered_roles must include V")


def restrict_frame(frame: VerbFrame, cfg: QueryGenConfig) -> VerbFrame:
    """Drop spans whose role is outside the considered set; V is always kept
    and document order is preserved."""
    kept = tuple(
        span for span in frame.roles
        if span.role.label == "V" or span.role in cfg.considered_roles
    )
    return VerbFrame(verb_index=frame.verb_index, roles=kept)


def frame_eligible(frame: VerbFrame, tokens: Sequence[Token], cfg: QueryGenConfig) -> bool:
    """A restricted frame yields queries iff its verb lemma is not a stopword
    and at least ``min_roles`` roles remain (V counts)."""
    if tokens[frame.verb_index].lemma in cfg.stopword_verb_lemmas:
        return False
    return len(frame.roles) >= cfg.min_roles


def generate_queries(desc: AnnotatedDescription, cfg: QueryGenConfig) -> list[QueryRecord]:
    """One query per (eligible restricted frame, role), including the verb.

    Query ids are ``{segment_id}:{frame_index}:{role}`` with ``frame_index``
    counting the description's frames before eligibility filtering, so ids
    are stable under configuration changes.
    """
    queries: list[QueryRecord] = []
    for frame_index, frame in enumerate(desc.frames):
        restricted = restrict_frame(frame, cfg)
        if not frame_eligible(restricted, desc.tokens, cfg):
            continue
        lo = min(span.start for span in restricted.roles)
        hi = max(span.end for span in restricted.roles)
        for span in restricted.roles:
            query_tokens = (
                tuple(desc.tokens[lo:span.start])
                + (Placeholder(span.role),)
                + tuple(desc.tokens[span.end:hi])
            )
            queries.append(QueryRecord(
                query_id=f"{desc.segment_id}:{frame_index}:{span.role.label}",
                video_id=desc.video_id,
                segment_id=desc.segment_id,
                frame_index=frame_index,
                masked_role=span.role,
                query_tokens=query_tokens,
                answer_tokens=tuple(desc.tokens[span.start:span.end]),
            ))
    return queries

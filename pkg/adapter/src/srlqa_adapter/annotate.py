"""Rule-based shallow annotation: tokenization, coarse POS + lemmas, verb
frames with role spans, and document-level pronoun clusters.

The engine is deterministic and self-contained so the pipeline runs with no
model downloads; `model_tag` records which engine produced a corpus.  Output
records follow the downstream interchange schemas exactly (sorted-key JSON
lines, lowercase tokens, one V span per frame covering the verb token).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .lexicon import (
    ARG2_PREPOSITIONS,
    AUXILIARIES,
    CONJUNCTIONS,
    DETERMINERS,
    IRREGULAR_NOUN_LEMMAS,
    IRREGULAR_VERB_LEMMAS,
    LOC_PREPOSITIONS,
    PARTICLES,
    PERSON_NOUNS,
    PRONOUNS,
    VERB_LEMMAS,
)

ENGINE_TAG = "rulebased-v1"

NOUN, VERB, OTHER = "NOUN", "VERB", "OTHER"

_PUNCT = re.compile(r"^[\.,!\?;:\"'`\(\)\[\]]+$")
_WORD = re.compile(r"[a-z0-9']+|[\.,!\?;:\"`\(\)\[\]]")


class AdapterError(Exception):
    pass


@dataclass(frozen=True)
class Caption:
    video_id: str
    segment_id: str
    text: str


def load_captions(stream: Iterable[str]) -> list[Caption]:
    captions = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"captions line {line_no}: invalid JSON: {exc}") from None
        for key in ("video_id", "segment_id", "text"):
            if key not in obj:
                raise AdapterError(f"captions line {line_no}: missing {key!r}")
        captions.append(Caption(str(obj["video_id"]), str(obj["segment_id"]),
                                str(obj["text"])))
    return captions


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


# ---------------------------------------------------------------------------
# lemmas and tags

def verb_lemma(word: str) -> str:
    if word in IRREGULAR_VERB_LEMMAS:
        return IRREGULAR_VERB_LEMMAS[word]

    def known(stem: str) -> Optional[str]:
        return stem if stem in VERB_LEMMAS else None

    if word.endswith("ies") and len(word) > 4:
        return known(word[:-3] + "y") or word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(("s", "x", "z", "ch", "sh")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        return word[:-1]
    for suffix in ("ing", "ed"):
        if word.endswith(suffix) and len(word) > len(suffix) + 1:
            stem = word[: -len(suffix)]
            if known(stem):
                return stem
            if len(stem) > 2 and stem[-1] == stem[-2] and known(stem[:-1]):
                return stem[:-1]
            if known(stem + "e"):
                return stem + "e"
            return stem
    return word


def noun_lemma(word: str) -> str:
    if word in IRREGULAR_NOUN_LEMMAS:
        return IRREGULAR_NOUN_LEMMAS[word]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(("s", "x", "z", "ch", "sh")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        return word[:-1]
    return word


def _is_verb_shaped(word: str) -> bool:
    return word in IRREGULAR_VERB_LEMMAS or verb_lemma(word) in VERB_LEMMAS


def _is_inflected_verb(word: str) -> bool:
    """True only for forms that morphologically differ from their lemma, so
    bare noun/verb homographs (put, cut, play) are handled by context."""
    if word in IRREGULAR_VERB_LEMMAS:
        return IRREGULAR_VERB_LEMMAS[word] != word
    lemma = verb_lemma(word)
    return lemma in VERB_LEMMAS and lemma != word


def tag(words: list[str]) -> list[tuple[str, str, str]]:
    """(surface, lemma, coarse pos) per token.

    Inflected verb forms are tagged VERB outright; bare verb/noun homographs
    ("put", "play") stay NOUN after a determiner or when the sentence already
    has an inflected verb.  Unknown content words default to NOUN.
    """
    has_inflected = any(
        _is_inflected_verb(w) for w in words
        if w not in DETERMINERS and w not in AUXILIARIES)
    tags: list[tuple[str, str, str]] = []
    for i, word in enumerate(words):
        prev = words[i - 1] if i > 0 else ""
        if _PUNCT.match(word):
            tags.append((word, word, OTHER))
        elif word in AUXILIARIES:
            tags.append((word, verb_lemma(word), VERB))
        elif (word in DETERMINERS or word in PRONOUNS or word in CONJUNCTIONS
              or word in PARTICLES or word in ARG2_PREPOSITIONS
              or word in LOC_PREPOSITIONS):
            tags.append((word, word, OTHER))
        elif _is_inflected_verb(word) and prev not in DETERMINERS:
            tags.append((word, verb_lemma(word), VERB))
        elif _is_verb_shaped(word) and not has_inflected and prev not in DETERMINERS:
            tags.append((word, verb_lemma(word), VERB))
        else:
            tags.append((word, noun_lemma(word), NOUN))
    return tags


# ---------------------------------------------------------------------------
# chunking and frames

def _main_verb_positions(tags) -> list[int]:
    """Non-auxiliary verb positions; an auxiliary directly supporting a later
    verb within two tokens is skipped."""
    positions = []
    for i, (surface, lemma, pos) in enumerate(tags):
        if pos != VERB:
            continue
        if surface in AUXILIARIES:
            window = tags[i + 1:i + 3]
            if any(p == VERB and s not in AUXILIARIES for s, _, p in window):
                continue
        positions.append(i)
    return positions


def chunk_phrases(tags, verb_positions):
    """Disjoint NP and PP spans.  NPs are determiner-noun runs or a single
    pronoun; a PP is a known preposition immediately followed by an NP."""
    n = len(tags)
    verb_set = set(verb_positions)
    nps: list[tuple[int, int]] = []
    i = 0
    while i < n:
        surface, _, pos = tags[i]
        if i in verb_set:
            i += 1
            continue
        if surface in PRONOUNS:
            nps.append((i, i + 1))
            i += 1
            continue
        if surface in DETERMINERS or pos == NOUN:
            start = i
            while i < n and tags[i][0] in DETERMINERS and i not in verb_set:
                i += 1
            noun_end = i
            while i < n and tags[i][2] == NOUN and i not in verb_set:
                i += 1
                noun_end = i
            if noun_end > start and tags[noun_end - 1][2] == NOUN:
                nps.append((start, noun_end))
                i = noun_end
            else:
                i = start + 1
            continue
        i += 1

    pps: list[tuple[str, int, int]] = []
    claimed: list[tuple[int, int]] = []
    for start, end in nps:
        prev = start - 1
        if prev >= 0 and prev not in verb_set:
            prep = tags[prev][0]
            if prep in ARG2_PREPOSITIONS:
                pps.append(("ARG2", prev, end))
                claimed.append((start, end))
            elif prep in LOC_PREPOSITIONS:
                pps.append(("ARGM-LOC", prev, end))
                claimed.append((start, end))
    free_nps = [span for span in nps if span not in claimed]
    return free_nps, pps


def extract_frames(tags) -> list[dict]:
    verb_positions = _main_verb_positions(tags)
    free_nps, pps = chunk_phrases(tags, verb_positions)
    frames = []
    n = len(tags)
    for k, v in enumerate(verb_positions):
        next_v = verb_positions[k + 1] if k + 1 < len(verb_positions) else n
        roles = [("V", v, v + 1)]
        subject = None
        for span in free_nps:
            if span[1] <= v:
                subject = span
        if subject is not None and free_nps and free_nps[0][1] <= v:
            subject = free_nps[0]
        if subject is not None:
            roles.append(("ARG0", subject[0], subject[1]))
        obj = next((s for s in free_nps if v < s[0] and s[1] <= next_v), None)
        if obj is not None:
            roles.append(("ARG1", obj[0], obj[1]))
        seen = {label for label, _, _ in roles}
        for label, start, end in pps:
            if start > v and end <= next_v and label not in seen:
                roles.append((label, start, end))
                seen.add(label)
        roles.sort(key=lambda r: r[1])
        frames.append({
            "verb_index": v,
            "roles": [{"role": label, "start": start, "end": end}
                      for label, start, end in roles],
        })
    return frames


# ---------------------------------------------------------------------------
# coreference

def _np_head(tags, span) -> str:
    return tags[span[1] - 1][1]


def build_clusters(segment_tags: list[tuple[str, list]]) -> list[dict]:
    """Per-document pronoun clusters over a video's segments in order.

    he/she/they and possessives link to the most recent preceding person NP;
    "it" links to the most recent non-person NP.  The representative is the
    antecedent noun phrase.
    """
    mentions_by_antecedent: dict[tuple, list[dict]] = {}
    seen_nps: list[tuple[str, tuple[int, int], str]] = []
    for segment_id, tags in segment_tags:
        verb_positions = _main_verb_positions(tags)
        free_nps, pps = chunk_phrases(tags, verb_positions)
        all_nps = sorted(free_nps + [(s + 1, e) for _, s, e in pps])

        def _admit(span):
            if span[1] - span[0] == 1 and tags[span[0]][0] in PRONOUNS:
                return
            seen_nps.append((segment_id, span, _np_head(tags, span)))

        next_np = 0
        for i, (surface, _, _) in enumerate(tags):
            while next_np < len(all_nps) and all_nps[next_np][1] <= i:
                _admit(all_nps[next_np])
                next_np += 1
            if surface not in PRONOUNS:
                continue
            want_person = surface != "it"
            antecedent = None
            for seg, span, head in reversed(seen_nps):
                if (head in PERSON_NOUNS) == want_person:
                    antecedent = (seg, span)
                    break
            if antecedent is None:
                continue
            mentions_by_antecedent.setdefault(antecedent, []).append(
                {"segment_id": segment_id, "start": i, "end": i + 1})
        while next_np < len(all_nps):
            _admit(all_nps[next_np])
            next_np += 1

    clusters = []
    for idx, ((seg, span), pronoun_mentions) in enumerate(
            sorted(mentions_by_antecedent.items())):
        mentions = [{"segment_id": seg, "start": span[0], "end": span[1]}]
        mentions.extend(pronoun_mentions)
        clusters.append({
            "cluster_id": f"{seg}:c{idx}",
            "representative": 0,
            "mentions": mentions,
        })
    return clusters


# ---------------------------------------------------------------------------
# full pass

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def annotate(captions: list[Caption]) -> tuple[list[dict], list[dict]]:
    """Caption records to (description records, cluster records)."""
    seen = set()
    for cap in captions:
        if cap.segment_id in seen:
            raise AdapterError(f"duplicate segment_id {cap.segment_id!r}")
        seen.add(cap.segment_id)

    descriptions = []
    by_video: dict[str, list[tuple[str, list]]] = {}
    for cap in captions:
        words = tokenize(cap.text)
        tags = tag(words)
        frames = extract_frames(tags)
        descriptions.append({
            "video_id": cap.video_id,
            "segment_id": cap.segment_id,
            "coref_applied": False,
            "tokens": [{"surface": s, "lemma": l, "pos": p} for s, l, p in tags],
            "frames": frames,
        })
        by_video.setdefault(cap.video_id, []).append((cap.segment_id, tags))

    clusters = []
    for video_id in sorted(by_video):
        clusters.extend(build_clusters(by_video[video_id]))
    return descriptions, clusters

"""Dataset construction: pronoun substitution, per-video description
selection, split handling, query generation and val/test pairing.

Inputs are description records, coreference cluster records and a split
manifest; outputs are per-split query lists, the contrastive pairs of the
val/test pool, and an audit trail of every dropped frame, unresolved
pronoun and filtered query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .corpus import (
    OTHER,
    AnnotatedDescription,
    ContrastivePair,
    QueryRecord,
    RoleSpan,
    SchemaError,
    Token,
    VerbFrame,
    _check_keys,
    _require,
    iter_jsonl,
    write_records,
)
from .contrastive import pair_eval_pool
from .querygen import QueryGenConfig, generate_queries

PRONOUNS = ("they", "he", "she", "his", "her", "it")
POSSESSIVE_PRONOUNS = ("his", "her")
SPLIT_NAMES = ("train", "val", "test")


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class Mention:
    segment_id: str
    start: int
    end: int


@dataclass(frozen=True)
class CorefCluster:
    """Mentions of one entity across a video's segments; the representative
    mention is the non-pronominal phrase substituted for pronouns."""

    cluster_id: str
    mentions: tuple[Mention, ...]
    representative: int


@dataclass(frozen=True)
class SplitManifest:
    """Disjoint video-id sets per split name."""

    splits: Mapping[str, frozenset[str]]

    def split_of(self, video_id: str) -> Optional[str]:
        for name, ids in self.splits.items():
            if video_id in ids:
                return name
        return None


# ---------------------------------------------------------------------------
# cluster / manifest records

def cluster_record(c: CorefCluster) -> dict:
    return {
        "cluster_id": c.cluster_id,
        "representative": c.representative,
        "mentions": [
            {"segment_id": m.segment_id, "start": m.start, "end": m.end} for m in c.mentions],
    }


def parse_clusters(stream: Iterable[str]) -> list[CorefCluster]:
    out = []
    for line_no, obj in iter_jsonl(stream):
        keys = {"cluster_id", "mentions", "representative"}
        _check_keys(obj, keys, keys, line_no, "")
        mentions = []
        for i, m in enumerate(_require(obj, "mentions", list, line_no, "")):
            path = f"mentions[{i}]"
            if not isinstance(m, dict):
                raise SchemaError(line_no, path, "mention must be an object")
            _check_keys(m, {"segment_id", "start", "end"}, {"segment_id", "start", "end"},
                        line_no, path + ".")
            start = _require(m, "start", int, line_no, path + ".")
            end = _require(m, "end", int, line_no, path + ".")
            if not 0 <= start < end:
                raise SchemaError(line_no, path + ".end", "empty or negative span")
            mentions.append(Mention(
                segment_id=_require(m, "segment_id", str, line_no, path + "."),
                start=start, end=end))
        rep = _require(obj, "representative", int, line_no, "")
        if not mentions:
            raise SchemaError(line_no, "mentions", "must be non-empty")
        if not 0 <= rep < len(mentions):
            raise SchemaError(line_no, "representative", "index out of range")
        out.append(CorefCluster(
            cluster_id=_require(obj, "cluster_id", str, line_no, ""),
            mentions=tuple(mentions),
            representative=rep))
    return out


def load_clusters(path) -> list[CorefCluster]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_clusters(fh)


def save_clusters(path, clusters: Iterable[CorefCluster]) -> None:
    write_records(path, (cluster_record(c) for c in clusters))


def parse_manifest(stream: Iterable[str]) -> SplitManifest:
    splits: dict[str, frozenset[str]] = {}
    for line_no, obj in iter_jsonl(stream):
        _check_keys(obj, {"split", "video_ids"}, {"split", "video_ids"}, line_no, "")
        name = _require(obj, "split", str, line_no, "")
        if name not in SPLIT_NAMES:
            raise SchemaError(line_no, "split", f"must be one of {SPLIT_NAMES}")
        if name in splits:
            raise SchemaError(line_no, "split", f"duplicate split {name!r}")
        ids = _require(obj, "video_ids", list, line_no, "")
        splits[name] = frozenset(str(v) for v in ids)
    for a in SPLIT_NAMES:
        for b in SPLIT_NAMES:
            if a < b and splits.get(a, frozenset()) & splits.get(b, frozenset()):
                overlap = sorted(splits[a] & splits[b])[0]
                raise BuildError(f"video {overlap!r} appears in both {a} and {b}")
    return SplitManifest(splits={name: splits.get(name, frozenset()) for name in SPLIT_NAMES})


def load_manifest(path) -> SplitManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_manifest(fh)


def save_manifest(path, manifest: SplitManifest) -> None:
    write_records(path, (
        {"split": name, "video_ids": sorted(manifest.splits.get(name, ()))}
        for name in SPLIT_NAMES))


def halve_video_ids(video_ids: Iterable[str]) -> tuple[list[str], list[str]]:
    """Deterministic half/half assignment by lexicographic rank (even ranks
    to the first half), for carving val/test out of one id pool."""
    ordered = sorted(set(video_ids))
    return ordered[0::2], ordered[1::2]


# ---------------------------------------------------------------------------
# coref substitution

def _representative_tokens(
    cluster: CorefCluster, by_segment: Mapping[str, AnnotatedDescription]
) -> Optional[tuple[Token, ...]]:
    """Tokens of the representative mention, falling back to the first
    non-pronominal mention when the recorded one is a bare pronoun."""
    candidates = [cluster.representative] + [
        i for i in range(len(cluster.mentions)) if i != cluster.representative]
    for idx in candidates:
        mention = cluster.mentions[idx]
        desc = by_segment.get(mention.segment_id)
        if desc is None:
            raise BuildError(
                f"cluster {cluster.cluster_id}: unknown segment {mention.segment_id!r}")
        if mention.end > len(desc.tokens):
            raise BuildError(
                f"cluster {cluster.cluster_id}: mention [{mention.start},{mention.end}) "
                f"outside segment {mention.segment_id!r}")
        tokens = desc.tokens[mention.start:mention.end]
        pronominal = len(tokens) == 1 and tokens[0].surface in PRONOUNS
        if not pronominal:
            return tokens
    return None


def apply_coref(
    descriptions: Sequence[AnnotatedDescription],
    clusters: Sequence[CorefCluster],
    on_audit: Optional[Callable[[dict], None]] = None,
) -> list[AnnotatedDescription]:
    """Substitute pronouns inside cluster mentions with the representative
    phrase, remapping every frame span across the length changes.

    Possessive pronouns get the representative phrase plus an ``'s`` token.
    Pronouns covered by no mention (or only by unusable clusters, or
    sitting on a verb position) are left unchanged and audited.  Nested
    mentions resolve to the outermost one.
    """
    by_segment = {d.segment_id: d for d in descriptions}
    rep_cache = {c.cluster_id: _representative_tokens(c, by_segment) for c in clusters}

    out = []
    for desc in descriptions:
        verb_positions = {f.verb_index for f in desc.frames}
        replacements: dict[int, tuple[Token, ...]] = {}
        for i, tok in enumerate(desc.tokens):
            if tok.surface not in PRONOUNS:
                continue
            covering = []
            for cluster in clusters:
                for mention in cluster.mentions:
                    if mention.segment_id == desc.segment_id and mention.start <= i < mention.end:
                        covering.append((mention.end - mention.start, -mention.start, cluster))
            chosen = None
            for _, _, cluster in sorted(covering, key=lambda c: (-c[0], c[1], c[2].cluster_id)):
                if rep_cache[cluster.cluster_id] is not None:
                    chosen = cluster
                    break
            if chosen is None or i in verb_positions:
                if on_audit is not None:
                    on_audit({"kind": "pronoun_unresolved", "segment_id": desc.segment_id,
                              "token_index": i, "surface": tok.surface})
                continue
            rep = rep_cache[chosen.cluster_id]
            if tok.surface in POSSESSIVE_PRONOUNS:
                rep = rep + (Token("'s", "'s", OTHER),)
            replacements[i] = rep

        if not replacements:
            out.append(AnnotatedDescription(
                video_id=desc.video_id, segment_id=desc.segment_id, tokens=desc.tokens,
                frames=desc.frames, coref_applied=True))
            continue

        new_tokens: list[Token] = []
        new_pos = [0] * (len(desc.tokens) + 1)
        for i, tok in enumerate(desc.tokens):
            new_pos[i] = len(new_tokens)
            new_tokens.extend(replacements.get(i, (tok,)))
        new_pos[len(desc.tokens)] = len(new_tokens)

        new_frames = tuple(
            VerbFrame(
                verb_index=new_pos[f.verb_index],
                roles=tuple(
                    RoleSpan(role=s.role, start=new_pos[s.start], end=new_pos[s.end])
                    for s in f.roles),
            )
            for f in desc.frames)
        out.append(AnnotatedDescription(
            video_id=desc.video_id, segment_id=desc.segment_id, tokens=tuple(new_tokens),
            frames=new_frames, coref_applied=True))
    return out


def select_descriptions(descriptions: Sequence[AnnotatedDescription]) -> list[AnnotatedDescription]:
    """Keep the description with the smallest segment_id per video; output
    is sorted by (video_id, segment_id) for byte-stable downstream files."""
    best: dict[str, AnnotatedDescription] = {}
    for desc in descriptions:
        current = best.get(desc.video_id)
        if current is None or desc.segment_id < current.segment_id:
            best[desc.video_id] = desc
    return sorted(best.values(), key=lambda d: (d.video_id, d.segment_id))


# ---------------------------------------------------------------------------
# full pipeline

@dataclass
class BuildResult:
    train: list[QueryRecord]
    val: list[QueryRecord]
    test: list[QueryRecord]
    pairs: list[ContrastivePair]
    train_pairs: list[ContrastivePair]
    audit: list[dict]


def build_dataset(
    descriptions: Sequence[AnnotatedDescription],
    clusters: Sequence[CorefCluster],
    cfg: QueryGenConfig,
    manifest: SplitManifest,
    pair_train: bool = False,
) -> BuildResult:
    """Coref substitution, one description per video, query generation per
    split, then pairing of the val+test pool (dropping queries without a
    partner).  Train is never filtered; its pairing is optional and runs
    within the train pool only."""
    audit: list[dict] = []

    for desc in descriptions:
        if manifest.split_of(desc.video_id) is None:
            raise BuildError(f"video {desc.video_id!r} missing from the split manifest")

    segment_video = {d.segment_id: d.video_id for d in descriptions}
    by_video: dict[str, list[AnnotatedDescription]] = {}
    for desc in descriptions:
        by_video.setdefault(desc.video_id, []).append(desc)
    clusters_by_video: dict[str, list[CorefCluster]] = {}
    for cluster in clusters:
        videos = {segment_video.get(m.segment_id) for m in cluster.mentions}
        if None in videos:
            missing = next(m.segment_id for m in cluster.mentions
                           if m.segment_id not in segment_video)
            raise BuildError(f"cluster {cluster.cluster_id}: unknown segment {missing!r}")
        if len(videos) != 1:
            raise BuildError(f"cluster {cluster.cluster_id} spans multiple videos")
        clusters_by_video.setdefault(videos.pop(), []).append(cluster)

    resolved: list[AnnotatedDescription] = []
    for video_id in sorted(by_video):
        descs = sorted(by_video[video_id], key=lambda d: d.segment_id)
        resolved.extend(apply_coref(descs, clusters_by_video.get(video_id, []), audit.append))

    selected = select_descriptions(resolved)
    audit.append({"kind": "count", "name": "descriptions_selected", "value": len(selected)})

    split_queries: dict[str, list[QueryRecord]] = {name: [] for name in SPLIT_NAMES}
    sources = {d.segment_id: d for d in selected}
    for desc in selected:
        split = manifest.split_of(desc.video_id)
        split_queries[split].extend(generate_queries(desc, cfg))
    for name in SPLIT_NAMES:
        audit.append({"kind": "count", "name": f"queries_{name}_generated",
                      "value": len(split_queries[name])})

    def record_drop(query_id: str, split: str, reason: str) -> None:
        audit.append({"kind": "query_dropped", "query_id": query_id,
                      "split": split, "reason": reason})

    pairs, kept_val, kept_test = pair_eval_pool(
        split_queries["val"], split_queries["test"], sources, cfg, on_drop=record_drop)
    pairs.sort(key=lambda p: p.query_id_i)

    train_pairs: list[ContrastivePair] = []
    if pair_train:
        train_pairs, _, _ = pair_eval_pool(split_queries["train"], [], sources, cfg)
        train_pairs.sort(key=lambda p: p.query_id_i)
        audit.append({"kind": "count", "name": "train_pairs", "value": len(train_pairs)})

    audit.append({"kind": "count", "name": "queries_val_kept", "value": len(kept_val)})
    audit.append({"kind": "count", "name": "queries_test_kept", "value": len(kept_test)})
    audit.append({"kind": "count", "name": "pairs", "value": len(pairs)})

    return BuildResult(
        train=split_queries["train"],
        val=kept_val,
        test=kept_test,
        pairs=pairs,
        train_pairs=train_pairs,
        audit=audit,
    )

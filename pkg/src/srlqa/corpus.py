"""Domain types and the line-record interchange schemas.

Every pipeline stage (annotation ingest, query generation, contrastive
pairing, scoring) exchanges data as UTF-8 JSON-lines files.  Records are
self-describing maps with fixed key names; the canonical serialization
sorts keys and uses compact separators, so serializing a parsed file
reproduces its canonical bytes exactly.

All types are immutable after construction and safe to share across
threads.  Inputs arrive pre-tokenized; the only normalization applied
here is lowercasing of surfaces and lemmas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

NOUN = "NOUN"
VERB = "VERB"
OTHER = "OTHER"
COARSE_POS = (NOUN, VERB, OTHER)

#: Role labels that may be masked or answered; anything else is carried
#: through verbatim but never takes part in query generation.
CORE_ROLE_LABELS = ("ARG0", "ARG1", "V", "ARG2", "LOC")

_ROLE_ALIASES = {"ARGM-LOC": "LOC"}


class SchemaError(ValueError):
    """A line record violates the interchange schema."""

    def __init__(self, line_no: int, field_path: str, message: str):
        super().__init__(f"line {line_no}: field '{field_path}': {message}")
        self.line_no = line_no
        self.field_path = field_path


@dataclass(frozen=True)
class ParseWarning:
    """Non-fatal defect found while parsing; the offending frame is dropped
    and the rest of the record is kept."""

    line_no: int
    segment_id: str
    frame_index: int
    reason: str


@dataclass(frozen=True)
class SrlRole:
    """A semantic-role label.

    ``label`` is one of :data:`CORE_ROLE_LABELS` for the roles the toolkit
    operates on.  Other raw labels (``ARGM-DIR``, ``ARGM-TMP``, ...) are
    preserved as-is so they can be inspected, but they are never masked.
    ``ARGM-LOC`` canonicalizes to ``LOC``.
    """

    label: str

    @classmethod
    def from_raw(cls, raw: str) -> "SrlRole":
        return cls(_ROLE_ALIASES.get(raw, raw))

    @property
    def is_core(self) -> bool:
        return self.label in CORE_ROLE_LABELS

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.label


V_ROLE = SrlRole("V")


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    coarse_pos: str = OTHER

    def __post_init__(self):
        if not self.surface or not self.lemma:
            raise ValueError("token surface and lemma must be non-empty")
        if any(ch.isspace() for ch in self.surface):
            raise ValueError(f"token surface contains whitespace: {self.surface!r}")
        if self.coarse_pos not in COARSE_POS:
            raise ValueError(f"unknown coarse_pos: {self.coarse_pos!r}")


@dataclass(frozen=True)
class Placeholder:
    """The query token standing in for a masked role.

    Rendering always replaces it, so it is never seen by a metric.
    """

    role: SrlRole

    @property
    def surface(self) -> str:
        return f"<Q-{self.role.label}>"


QueryToken = Union[Token, Placeholder]


@dataclass(frozen=True)
class RoleSpan:
    """Half-open token span ``[start, end)`` carrying one role."""

    role: SrlRole
    start: int
    end: int


@dataclass(frozen=True)
class VerbFrame:
    """One verb and its role spans, in document order.  Exactly one span has
    role V and it covers only ``verb_index``."""

    verb_index: int
    roles: tuple[RoleSpan, ...]


@dataclass(frozen=True)
class AnnotatedDescription:
    video_id: str
    segment_id: str
    tokens: tuple[Token, ...]
    frames: tuple[VerbFrame, ...]
    coref_applied: bool = False


@dataclass(frozen=True)
class QueryRecord:
    """A query expression with exactly one placeholder plus its gold answer.

    ``query_id`` is ``{segment_id}:{frame_index}:{role}`` and is stable
    across runs.
    """

    query_id: str
    video_id: str
    segment_id: str
    frame_index: int
    masked_role: SrlRole
    query_tokens: tuple[QueryToken, ...]
    answer_tokens: tuple[Token, ...]


@dataclass(frozen=True)
class ContrastivePair:
    query_id_i: str
    query_id_j: str


@dataclass(frozen=True)
class PredictionRecord:
    """A model's raw answer text for one query; tokenized on load by
    lowercasing and splitting on whitespace (never re-split further).
    Empty text is legal and renders to the bare query."""

    query_id: str
    answer_text: str
    answer_tokens: tuple[Token, ...] = field(default=())


def prediction_from_text(query_id: str, answer_text: str) -> PredictionRecord:
    toks = tuple(Token(w, w, OTHER) for w in answer_text.lower().split())
    return PredictionRecord(query_id=query_id, answer_text=answer_text, answer_tokens=toks)


@dataclass(frozen=True)
class ScoreRecord:
    """Per query and metric: the direct phrase score, the relative score
    (may be negative), clamped contrastive scores per threshold, and the
    consistency flag per threshold.  Contrastive/consistency maps are empty
    for unpaired queries."""

    query_id: str
    metric: str
    direct: float
    relative: float
    contrastive: Mapping[float, float]
    consistency: Mapping[float, int]


# ---------------------------------------------------------------------------
# rendering

def render(query: QueryRecord, filler: Sequence[Token]) -> tuple[Token, ...]:
    """Replace the query placeholder with ``filler`` in place.

    An empty filler deletes the placeholder with no gap token, so the output
    length is always ``len(query_tokens) - 1 + len(filler)``.
    """
    out: list[Token] = []
    for tok in query.query_tokens:
        if isinstance(tok, Placeholder):
            out.extend(filler)
        else:
            out.append(tok)
    return tuple(out)


def surfaces(tokens: Sequence[Union[Token, Placeholder]]) -> tuple[str, ...]:
    return tuple(t.surface for t in tokens)


def detokenize(tokens: Sequence[Union[Token, Placeholder]]) -> str:
    return " ".join(surfaces(tokens))


# ---------------------------------------------------------------------------
# canonical JSON helpers

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_records(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(canonical_json(rec))
            fh.write("\n")


def iter_jsonl(stream: Iterable[str]):
    """Yield ``(line_no, obj)`` for each non-blank line of a JSONL stream."""
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, "<record>", f"invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise SchemaError(line_no, "<record>", "record must be a JSON object")
        yield line_no, obj


def _require(obj: dict, key: str, types, line_no: int, path: str):
    if key not in obj:
        raise SchemaError(line_no, f"{path}{key}", "missing")
    val = obj[key]
    if types is not None:
        if isinstance(val, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
            raise SchemaError(line_no, f"{path}{key}", f"expected {types}, got bool")
        if not isinstance(val, types):
            raise SchemaError(line_no, f"{path}{key}", f"expected {types}, got {type(val).__name__}")
    return val


def _check_keys(obj: dict, allowed: set, required: set, line_no: int, path: str):
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(line_no, f"{path}{sorted(unknown)[0]}", "unexpected field")
    missing = required - set(obj)
    if missing:
        raise SchemaError(line_no, f"{path}{sorted(missing)[0]}", "missing")


# ---------------------------------------------------------------------------
# tokens

def token_record(tok: Token) -> dict:
    return {"surface": tok.surface, "lemma": tok.lemma, "pos": tok.coarse_pos}


def _parse_token(obj, line_no: int, path: str) -> Token:
    if not isinstance(obj, dict):
        raise SchemaError(line_no, path, "token must be an object")
    _check_keys(obj, {"surface", "lemma", "pos"}, {"surface", "lemma", "pos"}, line_no, path + ".")
    surface = _require(obj, "surface", str, line_no, path + ".").lower()
    lemma = _require(obj, "lemma", str, line_no, path + ".").lower()
    pos = _require(obj, "pos", str, line_no, path + ".")
    if not surface:
        raise SchemaError(line_no, path + ".surface", "empty")
    if any(ch.isspace() for ch in surface):
        raise SchemaError(line_no, path + ".surface", "contains whitespace")
    if not lemma:
        raise SchemaError(line_no, path + ".lemma", "empty")
    if pos not in COARSE_POS:
        raise SchemaError(line_no, path + ".pos", f"must be one of {COARSE_POS}")
    return Token(surface=surface, lemma=lemma, coarse_pos=pos)


# ---------------------------------------------------------------------------
# descriptions

def description_record(desc: AnnotatedDescription) -> dict:
    return {
        "video_id": desc.video_id,
        "segment_id": desc.segment_id,
        "coref_applied": desc.coref_applied,
        "tokens": [token_record(t) for t in desc.tokens],
        "frames": [
            {
                "verb_index": f.verb_index,
                "roles": [{"role": s.role.label, "start": s.start, "end": s.end} for s in f.roles],
            }
            for f in desc.frames
        ],
    }


def _parse_frame(obj, n_tokens: int, line_no: int, path: str) -> VerbFrame:
    if not isinstance(obj, dict):
        raise SchemaError(line_no, path, "frame must be an object")
    _check_keys(obj, {"verb_index", "roles"}, {"verb_index", "roles"}, line_no, path + ".")
    verb_index = _require(obj, "verb_index", int, line_no, path + ".")
    if not 0 <= verb_index < n_tokens:
        raise SchemaError(line_no, path + ".verb_index", f"out of range 0..{n_tokens - 1}")
    raw_roles = _require(obj, "roles", list, line_no, path + ".")
    spans = []
    for j, rs in enumerate(raw_roles):
        rpath = f"{path}.roles[{j}]"
        if not isinstance(rs, dict):
            raise SchemaError(line_no, rpath, "role span must be an object")
        _check_keys(rs, {"role", "start", "end"}, {"role", "start", "end"}, line_no, rpath + ".")
        label = _require(rs, "role", str, line_no, rpath + ".")
        start = _require(rs, "start", int, line_no, rpath + ".")
        end = _require(rs, "end", int, line_no, rpath + ".")
        if not (0 <= start < end <= n_tokens):
            raise SchemaError(line_no, rpath + ".end", f"span [{start},{end}) outside 0..{n_tokens}")
        spans.append(RoleSpan(role=SrlRole.from_raw(label), start=start, end=end))
    v_spans = [s for s in spans if s.role.label == "V"]
    if len(v_spans) != 1:
        raise SchemaError(line_no, path + ".roles", f"frame must carry exactly one V span, got {len(v_spans)}")
    v = v_spans[0]
    if v.start != verb_index or v.end != verb_index + 1:
        raise SchemaError(line_no, path + ".roles", "V span must cover exactly the verb_index token")
    spans.sort(key=lambda s: (s.start, s.end))
    return VerbFrame(verb_index=verb_index, roles=tuple(spans))


def _frame_defect(frame: VerbFrame) -> Optional[str]:
    """Overlap or duplicate-label defects make a frame unusable."""
    seen = set()
    for span in frame.roles:
        if span.role.label in seen:
            return "duplicate role label"
        seen.add(span.role.label)
    for left, right in zip(frame.roles, frame.roles[1:]):
        if right.start < left.end:
            return "overlapping role spans"
    return None


def parse_corpus(
    stream: Iterable[str],
    on_warning: Optional[Callable[[ParseWarning], None]] = None,
) -> list[AnnotatedDescription]:
    """Parse description records, validating every invariant.

    Schema violations raise :class:`SchemaError` naming the line and field.
    Frames with overlapping spans or duplicate role labels are dropped with
    a :class:`ParseWarning` passed to ``on_warning``.
    """
    out: list[AnnotatedDescription] = []
    seen_segments: dict[str, int] = {}
    for line_no, obj in iter_jsonl(stream):
        _check_keys(
            obj,
            {"video_id", "segment_id", "tokens", "frames", "coref_applied"},
            {"video_id", "segment_id", "tokens", "frames"},
            line_no,
            "",
        )
        video_id = _require(obj, "video_id", str, line_no, "")
        segment_id = _require(obj, "segment_id", str, line_no, "")
        if not video_id:
            raise SchemaError(line_no, "video_id", "empty")
        if not segment_id:
            raise SchemaError(line_no, "segment_id", "empty")
        if segment_id in seen_segments:
            raise SchemaError(
                line_no, "segment_id",
                f"duplicate {segment_id!r} (first on line {seen_segments[segment_id]})")
        seen_segments[segment_id] = line_no
        coref_applied = bool(obj.get("coref_applied", False))
        if "coref_applied" in obj and not isinstance(obj["coref_applied"], bool):
            raise SchemaError(line_no, "coref_applied", "expected bool")

        raw_tokens = _require(obj, "tokens", list, line_no, "")
        tokens = tuple(
            _parse_token(t, line_no, f"tokens[{i}]") for i, t in enumerate(raw_tokens))

        raw_frames = _require(obj, "frames", list, line_no, "")
        frames: list[VerbFrame] = []
        for i, fr in enumerate(raw_frames):
            frame = _parse_frame(fr, len(tokens), line_no, f"frames[{i}]")
            defect = _frame_defect(frame)
            if defect is not None:
                if on_warning is not None:
                    on_warning(ParseWarning(line_no, segment_id, i, defect))
                continue
            frames.append(frame)
        frames.sort(key=lambda f: f.verb_index)

        out.append(AnnotatedDescription(
            video_id=video_id,
            segment_id=segment_id,
            tokens=tokens,
            frames=tuple(frames),
            coref_applied=coref_applied,
        ))
    return out


def load_descriptions(path, on_warning=None) -> list[AnnotatedDescription]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_corpus(fh, on_warning=on_warning)


def save_descriptions(path, descs: Iterable[AnnotatedDescription]) -> None:
    write_records(path, (description_record(d) for d in descs))


# ---------------------------------------------------------------------------
# queries

def query_token_record(tok: QueryToken) -> dict:
    if isinstance(tok, Placeholder):
        return {"placeholder": tok.role.label}
    return token_record(tok)


def query_record(q: QueryRecord) -> dict:
    return {
        "query_id": q.query_id,
        "video_id": q.video_id,
        "segment_id": q.segment_id,
        "frame_index": q.frame_index,
        "masked_role": q.masked_role.label,
        "query_tokens": [query_token_record(t) for t in q.query_tokens],
        "answer_tokens": [token_record(t) for t in q.answer_tokens],
    }


def parse_queries(stream: Iterable[str]) -> list[QueryRecord]:
    out = []
    seen = set()
    for line_no, obj in iter_jsonl(stream):
        keys = {"query_id", "video_id", "segment_id", "frame_index",
                "masked_role", "query_tokens", "answer_tokens"}
        _check_keys(obj, keys, keys, line_no, "")
        query_id = _require(obj, "query_id", str, line_no, "")
        if not query_id:
            raise SchemaError(line_no, "query_id", "empty")
        if query_id in seen:
            raise SchemaError(line_no, "query_id", f"duplicate {query_id!r}")
        seen.add(query_id)
        frame_index = _require(obj, "frame_index", int, line_no, "")
        if frame_index < 0:
            raise SchemaError(line_no, "frame_index", "negative")
        masked = SrlRole.from_raw(_require(obj, "masked_role", str, line_no, ""))
        if not masked.is_core:
            raise SchemaError(line_no, "masked_role", f"{masked.label!r} is not maskable")
        qtoks: list[QueryToken] = []
        placeholders = 0
        for i, t in enumerate(_require(obj, "query_tokens", list, line_no, "")):
            path = f"query_tokens[{i}]"
            if isinstance(t, dict) and set(t) == {"placeholder"}:
                role = SrlRole.from_raw(_require(t, "placeholder", str, line_no, path + "."))
                qtoks.append(Placeholder(role))
                placeholders += 1
            else:
                qtoks.append(_parse_token(t, line_no, path))
        if placeholders != 1:
            raise SchemaError(line_no, "query_tokens", f"expected exactly one placeholder, got {placeholders}")
        ph = next(t for t in qtoks if isinstance(t, Placeholder))
        if ph.role != masked:
            raise SchemaError(line_no, "query_tokens", "placeholder role differs from masked_role")
        answers = [
            _parse_token(t, line_no, f"answer_tokens[{i}]")
            for i, t in enumerate(_require(obj, "answer_tokens", list, line_no, ""))
        ]
        if not answers:
            raise SchemaError(line_no, "answer_tokens", "must be non-empty")
        out.append(QueryRecord(
            query_id=query_id,
            video_id=_require(obj, "video_id", str, line_no, ""),
            segment_id=_require(obj, "segment_id", str, line_no, ""),
            frame_index=frame_index,
            masked_role=masked,
            query_tokens=tuple(qtoks),
            answer_tokens=tuple(answers),
        ))
    return out


def load_queries(path) -> list[QueryRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_queries(fh)


def save_queries(path, queries: Iterable[QueryRecord]) -> None:
    write_records(path, (query_record(q) for q in queries))


# ---------------------------------------------------------------------------
# pairs

def pair_record(p: ContrastivePair) -> dict:
    return {"query_id_i": p.query_id_i, "query_id_j": p.query_id_j}


def parse_pairs(stream: Iterable[str]) -> list[ContrastivePair]:
    out = []
    for line_no, obj in iter_jsonl(stream):
        _check_keys(obj, {"query_id_i", "query_id_j"}, {"query_id_i", "query_id_j"}, line_no, "")
        i = _require(obj, "query_id_i", str, line_no, "")
        j = _require(obj, "query_id_j", str, line_no, "")
        if i == j:
            raise SchemaError(line_no, "query_id_j", "pair members must differ")
        out.append(ContrastivePair(query_id_i=i, query_id_j=j))
    return out


def load_pairs(path) -> list[ContrastivePair]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_pairs(fh)


def save_pairs(path, pairs: Iterable[ContrastivePair]) -> None:
    write_records(path, (pair_record(p) for p in pairs))


# ---------------------------------------------------------------------------
# predictions

def prediction_record(p: PredictionRecord) -> dict:
    return {"query_id": p.query_id, "answer_text": p.answer_text}


def parse_predictions(stream: Iterable[str]) -> list[PredictionRecord]:
    out = []
    seen = set()
    for line_no, obj in iter_jsonl(stream):
        _check_keys(obj, {"query_id", "answer_text"}, {"query_id", "answer_text"}, line_no, "")
        query_id = _require(obj, "query_id", str, line_no, "")
        if query_id in seen:
            raise SchemaError(line_no, "query_id", f"duplicate {query_id!r}")
        seen.add(query_id)
        text = _require(obj, "answer_text", str, line_no, "")
        out.append(prediction_from_text(query_id, text))
    return out


def load_predictions(path) -> list[PredictionRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_predictions(fh)


def save_predictions(path, preds: Iterable[PredictionRecord]) -> None:
    write_records(path, (prediction_record(p) for p in preds))


# ---------------------------------------------------------------------------
# scores

def format_threshold(t: float) -> str:
    return format(t, "g")


def score_record(s: ScoreRecord) -> dict:
    return {
        "query_id": s.query_id,
        "metric": s.metric,
        "direct": s.direct,
        "relative": s.relative,
        "contrastive": {format_threshold(t): v for t, v in sorted(s.contrastive.items())},
        "consistency": {format_threshold(t): v for t, v in sorted(s.consistency.items())},
    }


def parse_scores(stream: Iterable[str]) -> list[ScoreRecord]:
    out = []
    for line_no, obj in iter_jsonl(stream):
        keys = {"query_id", "metric", "direct", "relative", "contrastive", "consistency"}
        _check_keys(obj, keys, keys, line_no, "")
        contrastive = _require(obj, "contrastive", dict, line_no, "")
        consistency = _require(obj, "consistency", dict, line_no, "")
        out.append(ScoreRecord(
            query_id=_require(obj, "query_id", str, line_no, ""),
            metric=_require(obj, "metric", str, line_no, ""),
            direct=float(_require(obj, "direct", (int, float), line_no, "")),
            relative=float(_require(obj, "relative", (int, float), line_no, "")),
            contrastive={float(k): float(v) for k, v in contrastive.items()},
            consistency={float(k): int(v) for k, v in consistency.items()},
        ))
    return out


def load_scores(path) -> list[ScoreRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scores(fh)


def save_scores(path, records: Iterable[ScoreRecord]) -> None:
    write_records(path, (score_record(s) for s in records))

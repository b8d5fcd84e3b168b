"""Per-token sentence vectors from a binary store file or a remote service.

Store layout (little-endian throughout):

    header:  [u16 tag_len][tag utf-8 bytes][u32 dim][u32 count]
    record:  [64 ascii bytes sentence key][u32 n][n * dim float32]

The sentence key is the SHA-256 hex digest of the token surfaces joined
with the unit separator ``\\x1f``; it is a pure function of the token
sequence, so file-backed and remote lookups agree.  Vectors are stored at
32-bit precision and re-normalized to unit length in float64 on load;
scores downstream are computed at 64-bit.
"""

from __future__ import annotations

import hashlib
import os
import struct
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
import requests

from .corpus import Token

KEY_BYTES = 64
#: A loaded or fetched vector must already be this close to unit norm;
#: anything further off is rejected rather than silently fixed.
NORM_TOLERANCE = 1e-3


class EmbeddingStoreError(Exception):
    """Malformed store file or remote protocol violation."""


class MissingEmbedding(KeyError):
    def __init__(self, sentence_key: str):
        super().__init__(sentence_key)
        self.sentence_key = sentence_key

    def __str__(self):
        return f"no embedding for sentence key {self.sentence_key}"


def key_from_surfaces(words: Sequence[str]) -> str:
    return hashlib.sha256("\x1f".join(words).encode("utf-8")).hexdigest()


def sentence_key(tokens: Sequence[Token]) -> str:
    return key_from_surfaces([t.surface for t in tokens])


@dataclass(frozen=True)
class EmbeddingBundle:
    """One rendered sentence's vectors: unit-norm float64 rows, one per
    token, under the producing model's tag."""

    sentence_key: str
    vectors: np.ndarray
    model_tag: str


def _normalized(vectors: np.ndarray, context: str) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise EmbeddingStoreError(f"{context}: expected a 2-d vector block")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise EmbeddingStoreError(f"{context}: vector norm off unit by {worst:.3g}")
    return vectors / norms[:, None]


class EmbeddingStore:
    """Read-only lookup of per-token vectors by sentence key."""

    def __init__(self, model_tag: str, dim: int):
        self.model_tag = model_tag
        self.dim = dim
        self._raw: dict[str, np.ndarray] = {}
        self._unit: dict[str, np.ndarray] = {}

    def add(self, key: str, vectors: np.ndarray) -> None:
        raw = np.asarray(vectors, dtype=np.float32)
        if raw.ndim != 2 or raw.shape[1] != self.dim:
            raise EmbeddingStoreError(f"bundle {key}: expected shape (n, {self.dim})")
        self._raw[key] = raw
        self._unit[key] = _normalized(raw, f"bundle {key}")

    def __len__(self) -> int:
        return len(self._raw)

    def __contains__(self, key: str) -> bool:
        return key in self._raw

    def keys(self):
        return self._raw.keys()

    def raw_vectors(self, key: str) -> np.ndarray:
        return self._raw[key]

    def vectors_for(self, tokens: Sequence[Token]) -> np.ndarray:
        key = sentence_key(tokens)
        unit = self._unit.get(key)
        if unit is None:
            raise MissingEmbedding(key)
        if unit.shape[0] != len(tokens):
            raise EmbeddingStoreError(
                f"bundle {key}: {unit.shape[0]} vectors for {len(tokens)} tokens")
        return unit

    def bundles(self) -> Iterator[tuple[str, np.ndarray]]:
        for key in self._raw:
            yield key, self._raw[key]


def write_store(path, model_tag: str, bundles: Iterable[tuple[str, np.ndarray]]) -> None:
    """Write bundles in key order so identical content gives identical bytes."""
    items = sorted((key, np.asarray(vec, dtype=np.float32)) for key, vec in bundles)
    if not items:
        raise EmbeddingStoreError("refusing to write an empty store")
    dim = items[0][1].shape[1]
    tag = model_tag.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<II", dim, len(items)))
        for key, vec in items:
            if len(key) != KEY_BYTES:
                raise EmbeddingStoreError(f"sentence key must be {KEY_BYTES} hex chars: {key!r}")
            if vec.ndim != 2 or vec.shape[1] != dim:
                raise EmbeddingStoreError(f"bundle {key}: expected shape (n, {dim})")
            fh.write(key.encode("ascii"))
            fh.write(struct.pack("<I", vec.shape[0]))
            fh.write(vec.astype("<f4").tobytes(order="C"))


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise EmbeddingStoreError(
            f"truncated store: wanted {n} bytes for {what} at offset {fh.tell() - len(data)}")
    return data


def _load_file(path, store: Optional[EmbeddingStore]) -> EmbeddingStore:
    with open(path, "rb") as fh:
        (tag_len,) = struct.unpack("<H", _read_exact(fh, 2, "header"))
        model_tag = _read_exact(fh, tag_len, "model_tag").decode("utf-8")
        dim, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if store is None:
            store = EmbeddingStore(model_tag=model_tag, dim=dim)
        elif store.model_tag != model_tag:
            raise EmbeddingStoreError(
                f"mixed model_tags: {store.model_tag!r} vs {model_tag!r} in {path}")
        elif store.dim != dim:
            raise EmbeddingStoreError(f"mixed dims: {store.dim} vs {dim} in {path}")
        for _ in range(count):
            key = _read_exact(fh, KEY_BYTES, "sentence key").decode("ascii")
            (n,) = struct.unpack("<I", _read_exact(fh, 4, "vector count"))
            blob = _read_exact(fh, n * dim * 4, f"vectors of {key}")
            vectors = np.frombuffer(blob, dtype="<f4").reshape(n, dim)
            store.add(key, vectors)
        extra = fh.read(1)
        if extra:
            raise EmbeddingStoreError(f"trailing bytes after last record in {path}")
    return store


def load_store(path) -> EmbeddingStore:
    """Load one store file, or every ``*.embs`` file in a directory (all
    files must share one model_tag)."""
    if os.path.isdir(path):
        files = sorted(
            os.path.join(path, name) for name in os.listdir(path) if name.endswith(".embs"))
        if not files:
            raise EmbeddingStoreError(f"no .embs files in {path}")
        store: Optional[EmbeddingStore] = None
        for f in files:
            store = _load_file(f, store)
        return store
    return _load_file(path, None)


class RemoteEmbeddingProvider:
    """Fetch per-token vectors over HTTP.

    Request:  POST <endpoint> with JSON ``{"tokens": [...], "model_tag": tag?}``.
    Response: JSON ``{"model_tag": tag, "vectors": [[...], ...]}`` with one
    vector per requested token.

    Responses are cached by sentence key, retried ``retries`` times on
    timeout, and validated: a misaligned vector count or an off-unit norm
    beyond :data:`NORM_TOLERANCE` is a protocol error.  At most
    ``max_in_flight`` requests run concurrently.
    """

    def __init__(
        self,
        endpoint: str,
        model_tag: Optional[str] = None,
        timeout: float = 10.0,
        retries: int = 2,
        max_in_flight: int = 4,
    ):
        self.endpoint = endpoint
        self.model_tag = model_tag
        self.timeout = timeout
        self.retries = retries
        self._session = requests.Session()
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._cache: dict[str, np.ndarray] = {}
        self._tags: dict[str, str] = {}
        self._lock = threading.Lock()

    def vectors_for(self, tokens: Sequence[Token]) -> np.ndarray:
        key = sentence_key(tokens)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        payload = {"tokens": [t.surface for t in tokens]}
        if self.model_tag is not None:
            payload["model_tag"] = self.model_tag
        response = self._post(payload)
        if response.status_code == 404:
            raise MissingEmbedding(key)
        if response.status_code != 200:
            raise EmbeddingStoreError(
                f"embedding service returned {response.status_code} for {key}")
        body = response.json()
        served_tag = body.get("model_tag", "")
        if self.model_tag is not None and served_tag and served_tag != self.model_tag:
            raise EmbeddingStoreError(
                f"mixed model_tags: asked for {self.model_tag!r}, got {served_tag!r}")
        vectors = np.asarray(body.get("vectors"), dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            got = vectors.shape[0] if vectors.ndim == 2 else "malformed"
            raise EmbeddingStoreError(
                f"misaligned response for {key}: {got} vectors for {len(tokens)} tokens")
        unit = _normalized(vectors, f"remote bundle {key}")
        with self._lock:
            self._cache[key] = unit
            self._tags[key] = served_tag
        return unit

    def fetch(self, tokens: Sequence[Token]) -> EmbeddingBundle:
        vectors = self.vectors_for(tokens)
        key = sentence_key(tokens)
        return EmbeddingBundle(sentence_key=key, vectors=vectors,
                               model_tag=self._tags.get(key, self.model_tag or ""))

    def _post(self, payload):
        last_timeout = None
        for _ in range(self.retries + 1):
            try:
                with self._gate:
                    return self._session.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.Timeout as exc:
                last_timeout = exc
        raise EmbeddingStoreError(
            f"embedding service timed out after {self.retries + 1} attempts") from last_timeout


def fetch_remote(endpoint: str, tokens: Sequence[Token], **kwargs) -> EmbeddingBundle:
    """One-shot fetch of a single sentence's bundle."""
    return RemoteEmbeddingProvider(endpoint, **kwargs).fetch(tokens)


def open_provider(spec: str):
    """``http(s)://...`` selects the remote provider, anything else a store path."""
    if spec.startswith("http://") or spec.startswith("https://"):
        return RemoteEmbeddingProvider(spec)
    return load_store(spec)


def rendered_sentence_inventory(queries, predictions=None) -> list[tuple[Token, ...]]:
    """Every token sequence the scorer may look up vectors for: the filled
    reference, the bare query, and the gold answer of each query, plus the
    filled hypothesis and bare prediction for each supplied prediction.
    Deduplicated by sentence key; empty sequences are skipped (an empty
    hypothesis scores 0 without a lookup)."""
    from .corpus import render

    by_id = {q.query_id: q for q in queries}
    seen: dict[str, tuple[Token, ...]] = {}

    def _add(tokens):
        if tokens:
            seen.setdefault(sentence_key(tokens), tuple(tokens))

    for q in queries:
        _add(render(q, q.answer_tokens))
        _add(render(q, ()))
        _add(q.answer_tokens)
    for pred in predictions or ():
        q = by_id.get(pred.query_id)
        if q is None:
            continue
        _add(render(q, pred.answer_tokens))
        _add(pred.answer_tokens)
    return [seen[k] for k in sorted(seen)]

"""Per-token embedding export for rendered query sentences.

Produces the binary store consumed downstream (little-endian; header
[u16 tag_len][tag][u32 dim][u32 count], records [64-hex key][u32 n]
[n*dim float32]).  One bundle is written per distinct rendered sentence:
the query filled with the gold answer, the bare query, the bare answer,
and, when predictions are supplied, the filled hypothesis and the bare
prediction.

Two backends: a deterministic hash encoder (no downloads, the default) and
a transformers encoder that mean-pools subword vectors per word.  Both
emit unit-norm vectors, float32 on disk.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import sys
from typing import Iterable, Optional

import numpy as np

from .annotate import AdapterError

KEY_BYTES = 64


def key_from_surfaces(words: list[str]) -> str:
    return hashlib.sha256("\x1f".join(words).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# query records (read side of the interchange schema)

def load_query_sentences(stream: Iterable[str]) -> list[dict]:
    """Minimal query-record reader: query_id, query word list with the
    placeholder position, and the gold answer words."""
    out = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"queries line {line_no}: invalid JSON: {exc}") from None
        words = []
        slot = None
        for tok in obj["query_tokens"]:
            if "placeholder" in tok:
                slot = len(words)
            else:
                words.append(tok["surface"])
        if slot is None:
            raise AdapterError(f"queries line {line_no}: no placeholder")
        out.append({
            "query_id": obj["query_id"],
            "words": words,
            "slot": slot,
            "answer": [tok["surface"] for tok in obj["answer_tokens"]],
        })
    return out


def load_prediction_texts(stream: Iterable[str]) -> dict[str, list[str]]:
    preds = {}
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        obj = json.loads(line)
        preds[obj["query_id"]] = obj["answer_text"].lower().split()
    return preds


def fill(query: dict, answer_words: list[str]) -> list[str]:
    return query["words"][:query["slot"]] + answer_words + query["words"][query["slot"]:]


def sentence_inventory(queries: list[dict],
                       predictions: Optional[dict[str, list[str]]] = None) -> list[list[str]]:
    """Distinct non-empty word sequences the scorer will look up."""
    seen: dict[str, list[str]] = {}

    def add(words):
        if words:
            seen.setdefault(key_from_surfaces(words), words)

    for q in queries:
        add(fill(q, q["answer"]))
        add(fill(q, []))
        add(q["answer"])
        if predictions and q["query_id"] in predictions:
            pred = predictions[q["query_id"]]
            add(fill(q, pred))
            add(pred)
    return [seen[key] for key in sorted(seen)]


# ---------------------------------------------------------------------------
# backends

class HashBackend:
    """Deterministic pseudo-contextual encoder: a token's vector is seeded by
    the whole sentence plus its position, so re-exports are bit-identical."""

    def __init__(self, dim: int = 32):
        self.dim = dim
        self.model_tag = f"hash-rnd-{dim}-v1"

    def encode(self, words: list[str]) -> np.ndarray:
        sent = "\x1f".join(words)
        out = np.zeros((len(words), self.dim))
        for i in range(len(words)):
            seed = hashlib.sha256(f"{sent}|{i}".encode("utf-8")).digest()[:8]
            rng = np.random.default_rng(int.from_bytes(seed, "little"))
            vec = rng.standard_normal(self.dim)
            out[i] = vec / np.linalg.norm(vec)
        return out


class TransformersBackend:
    """Contextual encoder over a local/cached transformers checkpoint.

    Subword vectors from the chosen hidden layer are mean-pooled per word
    and unit-normalized.  Sentences longer than the encoder window are
    truncated with a warning; words lost to truncation reuse the sentence
    mean so the one-vector-per-word contract still holds.
    """

    def __init__(self, model_name: str, layer: int = -1, max_length: int = 512):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise AdapterError(f"transformers backend unavailable: {exc}") from None
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModel.from_pretrained(model_name, output_hidden_states=True)
        except Exception as exc:
            raise AdapterError(f"could not load model {model_name!r}: {exc}") from None
        self._torch = torch
        self._model.eval()
        self.layer = layer
        self.max_length = max_length
        self.model_tag = f"{model_name}_L{layer}"

    def encode(self, words: list[str]) -> np.ndarray:
        enc = self._tokenizer(words, is_split_into_words=True, truncation=True,
                              max_length=self.max_length, return_tensors="pt")
        with self._torch.no_grad():
            hidden = self._model(**enc).hidden_states[self.layer][0].numpy()
        pooled = np.zeros((len(words), hidden.shape[1]))
        counts = np.zeros(len(words))
        for pos, word_id in enumerate(enc.word_ids(0)):
            if word_id is not None:
                pooled[word_id] += hidden[pos]
                counts[word_id] += 1
        missing = counts == 0
        if missing.any():
            print(f"warning: truncation dropped {int(missing.sum())} of "
                  f"{len(words)} words; padding with the sentence mean",
                  file=sys.stderr)
            pooled[missing] = hidden.mean(axis=0)
            counts[missing] = 1
        pooled /= counts[:, None]
        return pooled / np.linalg.norm(pooled, axis=1)[:, None]


def make_backend(name: str, dim: int = 32, model: Optional[str] = None):
    if name == "hash":
        return HashBackend(dim=dim)
    if name == "transformers":
        if not model:
            raise AdapterError("--backend transformers requires --model")
        return TransformersBackend(model)
    raise AdapterError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# store io

def write_store(path, model_tag: str, bundles: list[tuple[str, np.ndarray]]) -> None:
    """Atomic write (temp file + rename), bundles sorted by key."""
    items = sorted((key, np.asarray(vec, dtype=np.float32)) for key, vec in bundles)
    if not items:
        raise AdapterError("nothing to export")
    dim = items[0][1].shape[1]
    tag = model_tag.encode("utf-8")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<II", dim, len(items)))
        for key, vec in items:
            fh.write(key.encode("ascii"))
            fh.write(struct.pack("<I", vec.shape[0]))
            fh.write(vec.astype("<f4").tobytes(order="C"))
    os.replace(tmp, path)


def read_store(path) -> tuple[str, dict[str, np.ndarray]]:
    """Reader for the same layout (used by the mock service and tests)."""
    bundles = {}
    with open(path, "rb") as fh:
        (tag_len,) = struct.unpack("<H", fh.read(2))
        model_tag = fh.read(tag_len).decode("utf-8")
        dim, count = struct.unpack("<II", fh.read(8))
        for _ in range(count):
            key = fh.read(KEY_BYTES).decode("ascii")
            (n,) = struct.unpack("<I", fh.read(4))
            vec = np.frombuffer(fh.read(n * dim * 4), dtype="<f4").reshape(n, dim)
            bundles[key] = vec
    return model_tag, bundles


def export_embeddings(queries: list[dict], predictions, backend) -> list[tuple[str, np.ndarray]]:
    sentences = sentence_inventory(queries, predictions)
    return [(key_from_surfaces(words), backend.encode(words).astype(np.float32))
            for words in sentences]

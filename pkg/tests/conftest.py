"""Shared fixtures: a tiny test lexicon, description factories, synthetic
corpora with engineered partner structure, pseudo-embeddings and a mock
embedding service."""

import hashlib
import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from srlqa.corpus import (
    NOUN,
    OTHER,
    VERB,
    AnnotatedDescription,
    RoleSpan,
    SrlRole,
    Token,
    VerbFrame,
)
from srlqa.embeddings import sentence_key, write_store

_NOUNS = """person man woman boy girl dog cat ball box chair guitar knife plate
bag vegetable shoe shoes pair kitchen field table basket shot put track water
bottle rope strap hat drum piano cardboard""".split()

_VERBS = """cut cuts cutting move moves lift lifts carry carries throw throws
pick picks play plays kick kicks chase chases hold holds wash washes push
pushes pull pulls drop drops open opens grab grabs""".split()

LEMMAS = {
    "cuts": "cut", "cutting": "cut", "moves": "move", "lifts": "lift",
    "carries": "carry", "throws": "throw", "picks": "pick", "plays": "play",
    "kicks": "kick", "chases": "chase", "holds": "hold", "washes": "wash",
    "pushes": "push", "pulls": "pull", "drops": "drop", "opens": "open",
    "grabs": "grab", "shoes": "shoe",
    "is": "be", "are": "be", "was": "be", "were": "be",
}

POS_VERBS_EXTRA = ("is", "are", "was", "were")

POS = {w: NOUN for w in _NOUNS}
POS.update({w: VERB for w in _VERBS})
POS.update({w: VERB for w in POS_VERBS_EXTRA})


def tok(word):
    return Token(word, LEMMAS.get(word, word), POS.get(word, OTHER))


def toks(text):
    return tuple(tok(w) for w in text.split())


def make_desc(video_id, segment_id, text, frames, coref_applied=False):
    """frames: list of (verb_index, [(label, start, end), ...]); the V span
    is added automatically."""
    tokens = toks(text)
    built = []
    for verb_index, roles in frames:
        spans = [RoleSpan(SrlRole.from_raw("V"), verb_index, verb_index + 1)]
        spans += [RoleSpan(SrlRole.from_raw(label), start, end) for label, start, end in roles]
        spans.sort(key=lambda s: (s.start, s.end))
        built.append(VerbFrame(verb_index=verb_index, roles=tuple(spans)))
    return AnnotatedDescription(
        video_id=video_id, segment_id=segment_id, tokens=tokens,
        frames=tuple(built), coref_applied=coref_applied)


def svo_desc(video_id, segment_id, subject, verb, obj, instrument):
    """'the S V the O with the I' with ARG0/V/ARG1/ARG2 spans."""
    text = f"the {subject} {verb} the {obj} with the {instrument}"
    return make_desc(video_id, segment_id, text, [
        (2, [("ARG0", 0, 2), ("ARG1", 3, 5), ("ARG2", 5, 8)]),
    ])


def grid_corpus(subjects, verbs, objects, instruments, prefix="g"):
    """One video per slot combination; every query of every role has a
    partner differing only in its own slot."""
    descs = []
    k = 0
    for s in subjects:
        for v in verbs:
            for o in objects:
                for i in instruments:
                    descs.append(svo_desc(f"{prefix}v{k:03d}", f"{prefix}s{k:03d}", s, v, o, i))
                    k += 1
    return descs


def random_corpus(n_videos, seed=0, nouns=None, verbs=None, prefix="r"):
    rng = random.Random(seed)
    nouns = nouns or ["man", "woman", "dog", "boy", "girl", "cat"]
    verbs = verbs or ["lift", "carry", "push", "pull"]
    objects = ["box", "chair", "ball", "bag"]
    instruments = ["rope", "strap", "hat", "knife"]
    descs = []
    for k in range(n_videos):
        descs.append(svo_desc(
            f"{prefix}v{k:04d}", f"{prefix}s{k:04d}",
            rng.choice(nouns), rng.choice(verbs), rng.choice(objects),
            rng.choice(instruments)))
    return descs


# ---------------------------------------------------------------------------
# pseudo-embeddings

def hash_vectors(tokens, dim=16):
    """Deterministic context-sensitive unit vectors: a token's vector depends
    on the whole sentence and its position, like a contextual encoder."""
    sent = "\x1f".join(t.surface for t in tokens)
    out = np.zeros((len(tokens), dim))
    for i in range(len(tokens)):
        seed = hashlib.sha256(f"{sent}|{i}".encode("utf-8")).digest()[:8]
        rng = np.random.default_rng(int.from_bytes(seed, "little"))
        vec = rng.standard_normal(dim)
        out[i] = vec / np.linalg.norm(vec)
    return out


def surface_vectors(words, dim=16):
    return hash_vectors([Token(w, w, OTHER) for w in words], dim)


class HashProvider:
    """In-memory provider computing pseudo-embeddings on demand."""

    def __init__(self, dim=16):
        self.dim = dim
        self._cache = {}

    def vectors_for(self, tokens):
        key = sentence_key(tokens)
        if key not in self._cache:
            self._cache[key] = hash_vectors(tokens, self.dim)
        return self._cache[key]


def write_hash_store(path, sentences, dim=16, model_tag="hash-v1"):
    write_store(path, model_tag, [
        (sentence_key(s), hash_vectors(s, dim).astype(np.float32)) for s in sentences])


# ---------------------------------------------------------------------------
# mock embedding service

def start_embed_server(dim=16, behavior="ok", delay=0.0):
    """Returns (url, server); caller must server.shutdown().

    behavior: 'ok' serves hash vectors, 'short' drops the last vector,
    'skewed' returns non-unit vectors.
    """

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            try:
                if delay:
                    import time
                    time.sleep(delay)
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length))
                # float32 rounding matches what a store file would deliver
                vecs = surface_vectors(body["tokens"], dim).astype(np.float32)
                if behavior == "short" and len(vecs) > 1:
                    vecs = vecs[:-1]
                elif behavior == "skewed":
                    vecs = vecs * 3.0
                payload = json.dumps(
                    {"model_tag": "hash-v1",
                     "vectors": [[float(x) for x in row] for row in vecs]}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)
            except (BrokenPipeError, ConnectionResetError):
                pass

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return f"http://127.0.0.1:{server.server_address[1]}/embed", server


@pytest.fixture
def embed_url():
    url, server = start_embed_server()
    yield url
    server.shutdown()

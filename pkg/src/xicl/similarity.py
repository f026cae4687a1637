"""Text vectorization and similarity: TF-IDF, bag-of-words, embeddings, hybrid score.

TF-IDF uses the smoothed form idf(t) = ln((1+N)/(1+df(t))) + 1, so every weight
is strictly positive. All produced vectors are L2-normalized. Cosine returns 0
when either vector has zero norm (OOV-only texts rank last instead of crashing).
"""

from __future__ import annotations

import re
import struct
import threading
from dataclasses import dataclass
from math import log, sqrt
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ProtocolError, TransportError, ValidationError
from .hashutil import stable_digest, stable_hash64

_WORD_RE = re.compile(r"\w+", re.UNICODE)

EmbedFn = Callable[[Sequence[str]], list[np.ndarray]]


def tokenize(text: str) -> list[str]:
    """Lowercased Unicode-word tokens; deterministic, empty text gives []."""
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray  # int64, strictly increasing
    weights: np.ndarray  # float64, finite, no explicit zeros

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValidationError("sparse vector indices/weights length mismatch")
        if len(self.indices) > 1 and not np.all(np.diff(self.indices) > 0):
            raise ValidationError("sparse vector indices must be strictly increasing")
        if len(self.weights) and not np.all(np.isfinite(self.weights)):
            raise ValidationError("sparse vector weights must be finite")

    def __len__(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))


EMPTY_SPARSE = SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))


def _sparse_from_counts(counts: dict[int, float]) -> SparseVector:
    if not counts:
        return EMPTY_SPARSE
    idx = np.array(sorted(counts), dtype=np.int64)
    w = np.array([counts[i] for i in idx], dtype=np.float64)
    norm = sqrt(float(np.dot(w, w)))
    if norm > 0:
        w = w / norm
    return SparseVector(idx, w)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]  # term -> dense index in [0, |V|)
    idf: np.ndarray  # float64, idf[index]
    corpus_size: int


def fit_tfidf(corpus: Sequence[str]) -> TfidfModel:
    """Fit vocabulary and smoothed idf over a non-empty corpus of texts."""
    if len(corpus) == 0:
        raise ValidationError("cannot fit TF-IDF on an empty corpus")
    df: dict[str, int] = {}
    for text in corpus:
        for term in set(tokenize(text)):
            df[term] = df.get(term, 0) + 1
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    n = len(corpus)
    idf = np.array([log((1 + n) / (1 + df[t])) + 1.0 for t in sorted(df)], dtype=np.float64)
    return TfidfModel(vocabulary, idf, n)


def tfidf_vector(model: TfidfModel, text: str) -> SparseVector:
    """tf x idf, L2-normalized; out-of-vocabulary terms are dropped."""
    counts: dict[int, float] = {}
    for term in tokenize(text):
        idx = model.vocabulary.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0.0) + 1.0
    for idx in counts:
        counts[idx] *= float(model.idf[idx])
    return _sparse_from_counts(counts)


_BOW_MASK = 0x7FFFFFFF


def bow_vector(text: str) -> SparseVector:
    """Raw term counts over hashed 31-bit term indices, L2-normalized."""
    counts: dict[int, float] = {}
    for term in tokenize(text):
        idx = stable_hash64("bow", term) & _BOW_MASK
        counts[idx] = counts.get(idx, 0.0) + 1.0
    return _sparse_from_counts(counts)


def _sparse_cosine(a: SparseVector, b: SparseVector) -> float:
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    _, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    if len(ia) == 0:
        return 0.0
    return float(np.dot(a.weights[ia], b.weights[ib]) / (na * nb))


def cosine(a: SparseVector | np.ndarray, b: SparseVector | np.ndarray) -> float:
    """dot(a,b)/(|a||b|); 0 when either norm is 0; error on dense dim mismatch."""
    if isinstance(a, SparseVector) != isinstance(b, SparseVector):
        raise ValidationError("cannot mix sparse and dense vectors in cosine")
    if isinstance(a, SparseVector):
        return _sparse_cosine(a, b)
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValidationError(f"dense dimension mismatch: {av.shape} vs {bv.shape}")
    na = sqrt(float(np.dot(av, av)))
    nb = sqrt(float(np.dot(bv, bv)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(av, bv) / (na * nb))


@dataclass(frozen=True)
class HybridWeights:
    w_embed: float = 1.0 / 3.0
    w_tfidf: float = 1.0 / 3.0
    w_bow: float = 1.0 / 3.0

    def __post_init__(self):
        ws = (self.w_embed, self.w_tfidf, self.w_bow)
        if any(w < 0 for w in ws):
            raise ValidationError(f"hybrid weights must be non-negative, got {ws}")
        if sum(ws) <= 0:
            raise ValidationError("hybrid weights must not all be zero")

    @classmethod
    def parse(cls, spec: str) -> "HybridWeights":
        parts = [float(p) for p in spec.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"expected three comma-separated weights, got {spec!r}")
        return cls(*parts)


def hybrid_score(
    query_text: str,
    candidate_text: str,
    weights: HybridWeights,
    tfidf_model: TfidfModel,
    embed_fn: EmbedFn,
) -> float:
    """w_embed*cos_embed + w_tfidf*cos_tfidf + w_bow*cos_bow."""
    score = 0.0
    if weights.w_embed > 0:
        qv, cv = embed_fn([query_text, candidate_text])
        score += weights.w_embed * cosine(qv, cv)
    if weights.w_tfidf > 0:
        score += weights.w_tfidf * cosine(
            tfidf_vector(tfidf_model, query_text), tfidf_vector(tfidf_model, candidate_text)
        )
    if weights.w_bow > 0:
        score += weights.w_bow * cosine(bow_vector(query_text), bow_vector(candidate_text))
    return score


def hybrid_scores(
    query_text: str,
    candidate_texts: Sequence[str],
    weights: HybridWeights,
    tfidf_model: TfidfModel,
    embed_fn: EmbedFn,
) -> np.ndarray:
    """Hybrid score of the query against each candidate, embeddings batched once."""
    n = len(candidate_texts)
    scores = np.zeros(n, dtype=np.float64)
    if n == 0:
        return scores
    if weights.w_embed > 0:
        vecs = embed_fn([query_text, *candidate_texts])
        qv = vecs[0]
        for i in range(n):
            scores[i] += weights.w_embed * cosine(qv, vecs[i + 1])
    if weights.w_tfidf > 0:
        qv = tfidf_vector(tfidf_model, query_text)
        for i in range(n):
            scores[i] += weights.w_tfidf * cosine(qv, tfidf_vector(tfidf_model, candidate_texts[i]))
    if weights.w_bow > 0:
        qv = bow_vector(query_text)
        for i in range(n):
            scores[i] += weights.w_bow * cosine(qv, bow_vector(candidate_texts[i]))
    return scores


class TfidfSearchIndex:
    """Exhaustive-scan TF-IDF index over a corpus, built on an inverted posting list.

    Scores are cosine similarities between unit TF-IDF vectors. Ties break by
    ascending document index, so results are reproducible.
    """

    def __init__(self):
        self.model: TfidfModel | None = None
        self.size = 0
        self._postings: list[tuple[np.ndarray, np.ndarray]] = []

    def fit(self, corpus: Sequence[str]) -> "TfidfSearchIndex":
        self.model = fit_tfidf(corpus)
        self.size = len(corpus)
        buckets: list[list[tuple[int, float]]] = [[] for _ in range(len(self.model.vocabulary))]
        for doc_id, text in enumerate(corpus):
            vec = tfidf_vector(self.model, text)
            for idx, w in zip(vec.indices, vec.weights):
                buckets[int(idx)].append((doc_id, float(w)))
        self._postings = [
            (
                np.array([d for d, _ in bucket], dtype=np.int64),
                np.array([w for _, w in bucket], dtype=np.float64),
            )
            for bucket in buckets
        ]
        return self

    def search(self, query_text: str, k: int) -> list[tuple[int, float]]:
        if self.model is None:
            raise ValidationError("index is not fitted")
        qv = tfidf_vector(self.model, query_text)
        scores = np.zeros(self.size, dtype=np.float64)
        for idx, qw in zip(qv.indices, qv.weights):
            docs, ws = self._postings[int(idx)]
            scores[docs] += qw * ws
        k = min(k, self.size)
        order = np.argsort(-scores, kind="stable")[:k]
        return [(int(i), float(scores[i])) for i in order]


class HashEmbedder:
    """Deterministic bag-of-hashed-tokens embedding provider (no network).

    Each token maps to a fixed pseudo-random unit-scale vector derived from a
    stable hash; a text embeds to the normalized token-vector sum. Identical
    texts embed identically on every platform, which is what fixtures and the
    pipeline determinism tests need.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim <= 0:
            raise ValidationError("embedding dimension must be positive")
        self.dim = dim
        self.seed = seed
        self.provider_id = f"hash:{dim}:{seed}"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            words = []
            block = 0
            while len(words) < self.dim:
                raw = stable_digest(f"{self.seed}", token, f"{block}", size=64)
                words.extend(struct.unpack("<16I", raw))
                block += 1
            arr = np.array(words[: self.dim], dtype=np.float64)
            vec = (arr / 2147483648.0 - 1.0).astype(np.float32)
            self._token_cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            acc = np.zeros(self.dim, dtype=np.float64)
            for token in tokenize(text):
                acc += self._token_vector(token)
            norm = sqrt(float(np.dot(acc, acc)))
            if norm > 0:
                acc = acc / norm
            out.append(acc.astype(np.float32))
        return out

    def __call__(self, texts: Sequence[str]) -> list[np.ndarray]:
        return self.embed(texts)


_RECORD_KEY_BYTES = 32


def embedding_cache_key(provider_id: str, text: str) -> bytes:
    return stable_digest(provider_id, text, size=_RECORD_KEY_BYTES)


class EmbeddingCache:
    """Append-only file cache of embeddings, keyed by (provider, text hash).

    Record layout: 32-byte key, u32 little-endian dim, dim float32 values.
    A truncated trailing record (interrupted append) is ignored on load.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[bytes, np.ndarray] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        data = self.path.read_bytes()
        pos = 0
        while pos + _RECORD_KEY_BYTES + 4 <= len(data):
            key = data[pos : pos + _RECORD_KEY_BYTES]
            (dim,) = struct.unpack_from("<I", data, pos + _RECORD_KEY_BYTES)
            end = pos + _RECORD_KEY_BYTES + 4 + 4 * dim
            if end > len(data):
                break
            vec = np.frombuffer(data[pos + _RECORD_KEY_BYTES + 4 : end], dtype="<f4").copy()
            self._entries[key] = vec
            pos = end

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: bytes) -> np.ndarray | None:
        vec = self._entries.get(key)
        return None if vec is None else vec.copy()

    def put(self, key: bytes, vector: np.ndarray) -> None:
        vec = np.ascontiguousarray(vector, dtype="<f4")
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = vec.copy()
            record = key + struct.pack("<I", len(vec)) + vec.tobytes()
            with open(self.path, "ab") as fh:
                fh.write(record)


def http_post_json(url: str, payload: dict, timeout: float = 30.0) -> dict:
    """POST JSON and return the decoded JSON response body.

    Connection-level failures raise TransportError; non-200 statuses and
    undecodable bodies raise ProtocolError.
    """
    import requests

    try:
        resp = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"POST {url} failed: {exc}") from exc
    if resp.status_code != 200:
        detail = ""
        try:
            detail = resp.json().get("error", "")
        except Exception:
            pass
        raise ProtocolError(f"POST {url} returned {resp.status_code}: {detail or resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as exc:
        raise ProtocolError(f"POST {url} returned non-JSON body") from exc


class EmbedClient:
    """Client for the /embed wire protocol with a persistent cache.

    Request: {"provider_id": str, "texts": [str]} -> {"dim": int, "vectors": [[float]]}.
    Cache misses are batched into a single request; hits never touch the network.
    """

    def __init__(
        self,
        url: str,
        provider_id: str,
        cache: EmbeddingCache | None = None,
        transport: Callable[[dict], dict] | None = None,
        max_in_flight: int = 4,
    ):
        self.url = url
        self.provider_id = provider_id
        self.cache = cache
        self._transport = transport or (lambda payload: http_post_json(self.url, payload))
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self.request_count = 0
        self._mem: dict[bytes, np.ndarray] = {}

    def _lookup(self, key: bytes) -> np.ndarray | None:
        vec = self._mem.get(key)
        if vec is not None:
            return vec.copy()
        if self.cache is not None:
            return self.cache.get(key)
        return None

    def _store(self, key: bytes, vec: np.ndarray) -> None:
        self._mem[key] = vec.copy()
        if self.cache is not None:
            self.cache.put(key, vec)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        keys = [embedding_cache_key(self.provider_id, t) for t in texts]
        found: dict[bytes, np.ndarray] = {}
        pending: dict[bytes, str] = {}  # ordered, deduped misses
        for key, text in zip(keys, texts):
            if key in found or key in pending:
                continue
            vec = self._lookup(key)
            if vec is not None:
                found[key] = vec
            else:
                pending[key] = text
        uniq_keys = list(pending)
        uniq_texts = list(pending.values())
        if uniq_texts:
            try:
                with self._sem:
                    self.request_count += 1
                    resp = self._transport({"provider_id": self.provider_id, "texts": uniq_texts})
            except TransportError as exc:
                raise TransportError(
                    f"embedding provider unreachable with cache misses {uniq_texts!r}: {exc}"
                ) from exc
            vectors = resp.get("vectors")
            if vectors is None or len(vectors) != len(uniq_texts):
                raise ProtocolError(
                    f"/embed returned {0 if vectors is None else len(vectors)} vectors "
                    f"for {len(uniq_texts)} texts"
                )
            dim = resp.get("dim")
            for key, vals in zip(uniq_keys, vectors):
                vec = np.asarray(vals, dtype=np.float32)
                if dim is not None and len(vec) != dim:
                    raise ProtocolError(f"/embed vector length {len(vec)} != declared dim {dim}")
                self._store(key, vec)
                found[key] = vec
        return [found[key].copy() for key in keys]

    def __call__(self, texts: Sequence[str]) -> list[np.ndarray]:
        return self.embed(texts)

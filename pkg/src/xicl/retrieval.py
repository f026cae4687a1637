"""Exemplar and alignment-pair retrieval strategies.

Four strategies: seeded random; monolingual semantic; cross-lingual semantic
(same algorithm, the store is simply in the source language); and translation
semantic similarity, which bridges through a parallel store in two monolingual
stages. Semantic rankings break ties by ascending store index so results are
reproducible and checkable against a brute-force scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import LabeledExample, ParallelPair
from .errors import ValidationError
from .similarity import EmbedFn, HybridWeights, cosine, fit_tfidf, hybrid_scores

PRNG_NAME = "splitmix64-fisher-yates-v1"

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 PRNG; tiny, seedable, identical on every platform."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValidationError("next_below requires n > 0")
        limit = ((1 << 64) // n) * n
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n


def sample_without_replacement(n: int, k: int, seed: int) -> list[int]:
    """Partial Fisher-Yates over range(n): k distinct indices, order significant."""
    rng = SplitMix64(seed)
    pool = list(range(n))
    for i in range(k):
        j = i + rng.next_below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


@dataclass(frozen=True)
class RetrievalStrategy:
    kind: str  # random | mono | cross | translate
    seed: int | None = None
    weights: HybridWeights | None = None

    KINDS = ("random", "mono", "cross", "translate")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValidationError(f"unknown retrieval strategy {self.kind!r}")
        if (self.kind == "random") != (self.seed is not None):
            raise ValidationError("a seed is required for random retrieval and only there")


@dataclass(frozen=True)
class RetrievalResult:
    items: tuple[tuple[LabeledExample, float], ...]
    strategy: str
    seed: int | None = None
    prng: str | None = None
    bridge_pair_id: str | None = None

    def __post_init__(self):
        scores = [s for _, s in self.items]
        if any(scores[i] < scores[i + 1] for i in range(len(scores) - 1)):
            raise ValidationError("retrieval scores must be non-increasing")
        ids = [ex.id for ex, _ in self.items]
        if len(set(ids)) != len(ids):
            raise ValidationError("retrieval result contains duplicate exemplar ids")

    def examples(self) -> list[LabeledExample]:
        return [ex for ex, _ in self.items]

    def to_json_obj(self) -> dict:
        obj: dict = {
            "strategy": self.strategy,
            "items": [
                {"id": ex.id, "score": score, "label": ex.label, "text": ex.content_text()}
                for ex, score in self.items
            ],
        }
        if self.seed is not None:
            obj["seed"] = self.seed
            obj["prng"] = self.prng
        if self.bridge_pair_id is not None:
            obj["bridge_pair_id"] = self.bridge_pair_id
        return obj


EMPTY_RESULT = RetrievalResult(items=(), strategy="none")


def retrieve_random(store: Sequence[LabeledExample], k: int, seed: int) -> RetrievalResult:
    """k distinct exemplars, uniform without replacement, deterministic per seed."""
    if k > len(store):
        raise ValidationError(f"cannot draw {k} exemplars from a store of {len(store)}")
    picks = sample_without_replacement(len(store), k, seed)
    items = tuple((store[i], 0.0) for i in picks)
    return RetrievalResult(items=items, strategy="random", seed=seed, prng=PRNG_NAME)


def _stable_top_k(scores: np.ndarray, k: int) -> list[int]:
    order = np.argsort(-scores, kind="stable")
    return [int(i) for i in order[:k]]


def retrieve_semantic(
    query_text: str,
    store: Sequence[LabeledExample],
    k: int,
    embed_fn: EmbedFn,
    strategy: str = "mono",
) -> RetrievalResult:
    """Top-k by embedding cosine; serves both monolingual and cross-lingual retrieval."""
    if not store:
        raise ValidationError("cannot retrieve from an empty store")
    if k > len(store):
        raise ValidationError(f"cannot retrieve {k} exemplars from a store of {len(store)}")
    texts = [ex.content_text() for ex in store]
    vecs = embed_fn([query_text, *texts])
    qv = vecs[0]
    scores = np.array([cosine(qv, v) for v in vecs[1:]], dtype=np.float64)
    picks = _stable_top_k(scores, k)
    items = tuple((store[i], float(scores[i])) for i in picks)
    return RetrievalResult(items=items, strategy=strategy)


def rank_parallel_by_target(
    query_text: str,
    parallel: Sequence[ParallelPair],
    weights: HybridWeights,
    embed_fn: EmbedFn,
) -> np.ndarray:
    """Hybrid monolingual similarity between the query and each pair's target side."""
    targets = [p.target_text for p in parallel]
    model = fit_tfidf(targets)
    return hybrid_scores(query_text, targets, weights, model, embed_fn)


def retrieve_translation(
    query_text: str,
    parallel: Sequence[ParallelPair],
    store: Sequence[LabeledExample],
    k: int,
    weights: HybridWeights,
    embed_fn: EmbedFn,
) -> RetrievalResult:
    """Two-stage translation semantic similarity.

    Stage 1 ranks the parallel store by monolingual hybrid similarity on the
    target side and keeps the single best bridge pair. Stage 2 ranks the source
    exemplar store by monolingual hybrid similarity against the bridge pair's
    source side and returns the top-k.
    """
    if not parallel:
        raise ValidationError("translation retrieval needs a non-empty parallel store")
    if not store:
        raise ValidationError("translation retrieval needs a non-empty exemplar store")
    if k > len(store):
        raise ValidationError(f"cannot retrieve {k} exemplars from a store of {len(store)}")
    stage1 = rank_parallel_by_target(query_text, parallel, weights, embed_fn)
    bridge = parallel[_stable_top_k(stage1, 1)[0]]
    if k == 0:
        return RetrievalResult(items=(), strategy="translate", bridge_pair_id=bridge.id)
    texts = [ex.content_text() for ex in store]
    model = fit_tfidf(texts)
    stage2 = hybrid_scores(bridge.source_text, texts, weights, model, embed_fn)
    picks = _stable_top_k(stage2, k)
    items = tuple((store[i], float(stage2[i])) for i in picks)
    return RetrievalResult(items=items, strategy="translate", bridge_pair_id=bridge.id)


def select_alignment_pairs(
    query_text: str,
    parallel: Sequence[ParallelPair],
    k: int,
    weights: HybridWeights,
    embed_fn: EmbedFn,
) -> list[ParallelPair]:
    """Top-k parallel pairs by monolingual target-side similarity to the query."""
    if not parallel:
        raise ValidationError("alignment selection needs a non-empty parallel store")
    if k > len(parallel):
        raise ValidationError(f"cannot select {k} pairs from a parallel store of {len(parallel)}")
    scores = rank_parallel_by_target(query_text, parallel, weights, embed_fn)
    return [parallel[i] for i in _stable_top_k(scores, k)]


def similarity_label_correlation(
    pairs: Sequence[tuple[str, str, int]],
    scorer: Callable[[str, str], float],
) -> float:
    """Pearson correlation between similarity scores and binary match labels."""
    from .evaluation import pearson

    if len(pairs) < 2:
        raise ValidationError("correlation needs at least two pairs")
    scores = [scorer(a, b) for a, b, _ in pairs]
    labels = [float(m) for _, _, m in pairs]
    return pearson(scores, labels)

"""Run orchestration: the inference-type matrix over an evaluation set.

Every configuration is a PromptPlan plus endpoint choices (scorer, embedder,
MT) and a translate-test switch. Endpoint specs accept offline forms so runs
stay hermetic: "mock:<salt>" / "chain:<salt>" for scorers, "hash:<dim>[:<seed>]"
for embeddings, "identity" for MT. A failed query becomes a failed RunRecord
tagged with the stage that broke; the run always finishes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .corpus import DatasetBundle, LabeledExample
from .errors import MissingLabelSetError, ProtocolError, TransportError, ValidationError
from .hashutil import stable_digest
from .prompt import TEMPLATE_VERSION, PromptPlan, assemble_prompt
from .retrieval import (
    PRNG_NAME,
    RetrievalResult,
    retrieve_random,
    retrieve_semantic,
    retrieve_translation,
    select_alignment_pairs,
)
from .scoring import ChainScorer, HttpScorer, MockScorer, Scorer, predict
from .similarity import (
    EmbedClient,
    EmbeddingCache,
    EmbedFn,
    HashEmbedder,
    HybridWeights,
    http_post_json,
)

DEFAULT_WORKERS = 4


class IdentityMt:
    """MT double that returns its input unchanged; zero network calls."""

    endpoint_id = "identity"

    def __init__(self):
        self.request_count = 0

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        return list(texts)


class MtClient:
    """Client for the /translate wire protocol with an in-memory cache.

    Request: {"src": str, "tgt": str, "texts": [str]} -> {"translations": [str]}.
    Cached by (endpoint id, src, tgt, text hash); misses are batched.
    """

    def __init__(self, url: str, transport: Callable[[dict], dict] | None = None):
        self.url = url
        self.endpoint_id = url
        self._transport = transport or (lambda payload: http_post_json(self.url, payload))
        self._cache: dict[bytes, str] = {}
        self._lock = threading.Lock()
        self.request_count = 0

    def _key(self, src: str, tgt: str, text: str) -> bytes:
        return stable_digest(self.endpoint_id, src, tgt, text)

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        if not texts:
            return []
        keys = [self._key(src, tgt, t) for t in texts]
        with self._lock:
            pending: dict[bytes, str] = {}
            for key, text in zip(keys, texts):
                if key not in self._cache and key not in pending:
                    pending[key] = text
        if pending:
            miss_keys, miss_texts = list(pending), list(pending.values())
            self.request_count += 1
            resp = self._transport({"src": src, "tgt": tgt, "texts": miss_texts})
            translations = resp.get("translations")
            if not isinstance(translations, list) or len(translations) != len(miss_texts):
                got = "missing" if translations is None else str(len(translations))
                raise ProtocolError(f"/translate returned {got} translations for {len(miss_texts)} texts")
            with self._lock:
                for key, tr in zip(miss_keys, translations):
                    self._cache[key] = str(tr)
        with self._lock:
            return [self._cache[key] for key in keys]


def translate(texts: Sequence[str], src_lang: str, tgt_lang: str, mt_client) -> list[str]:
    """Order-aligned translations through a /translate client (batched, cached)."""
    return mt_client.translate(texts, src_lang, tgt_lang)


def resolve_scorer(spec: str) -> Scorer:
    if spec.startswith("mock"):
        return MockScorer(spec.partition(":")[2] or "0")
    if spec.startswith("chain"):
        return ChainScorer(spec.partition(":")[2] or "0")
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpScorer(spec)
    raise ValidationError(f"unknown scorer endpoint {spec!r}")


def resolve_embedder(
    spec: str | None,
    provider_id: str = "default",
    cache_path: str | Path | None = None,
) -> EmbedFn | None:
    if spec is None:
        return None
    if spec.startswith("hash:"):
        parts = spec.split(":")
        dim = int(parts[1])
        seed = int(parts[2]) if len(parts) > 2 else 0
        return HashEmbedder(dim=dim, seed=seed)
    if spec.startswith("http://") or spec.startswith("https://"):
        cache = EmbeddingCache(cache_path) if cache_path else None
        return EmbedClient(spec, provider_id=provider_id, cache=cache)
    raise ValidationError(f"unknown embedding endpoint {spec!r}")


def resolve_mt(spec: str | None):
    if spec is None:
        return None
    if spec == "identity" or spec.startswith("identity:"):
        return IdentityMt()
    if spec.startswith("http://") or spec.startswith("https://"):
        return MtClient(spec)
    raise ValidationError(f"unknown MT endpoint {spec!r}")


@dataclass(frozen=True)
class InferenceConfig:
    run_id: str
    plan: PromptPlan
    scorer: str = "mock:0"
    embedder: str | None = None
    embed_provider: str = "default"
    mt: str | None = None
    translate_query: bool = False
    mode: str = "sum"  # logprob aggregation on the wire
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.translate_query and self.mt is None:
            raise ValidationError("translate_query requires an MT endpoint")
        if self.mode not in ("sum", "mean"):
            raise ValidationError(f"unknown scoring mode {self.mode!r}")

    def run_metadata(self) -> dict:
        meta = {
            "scorer": self.scorer,
            "embedder": self.embedder,
            "embed_provider": self.embed_provider,
            "mt": self.mt,
            "translate_query": self.translate_query,
            "mode": self.mode,
            "templates": TEMPLATE_VERSION,
            "prng": PRNG_NAME if self.plan.retrieval.kind == "random" else None,
            "seed": self.plan.retrieval.seed,
        }
        meta.update(self.metadata)
        return meta

    def to_json_obj(self) -> dict:
        return {
            "run_id": self.run_id,
            "plan": self.plan.to_json_obj(),
            **self.run_metadata(),
        }


@dataclass(frozen=True)
class RunRecord:
    query_id: str
    language: str
    gold_label: str
    status: str = "ok"  # ok | failed
    stage: str | None = None
    error: str | None = None
    exemplars: tuple[tuple[str, float], ...] = ()
    bridge_pair_id: str | None = None
    alignment_pair_ids: tuple[str, ...] = ()
    prompt_sha256: str | None = None
    candidates: tuple[tuple[str, str, float], ...] = ()  # (label, continuation, logprob)
    predicted_label: str | None = None
    wall_ms: float = 0.0

    def to_json_obj(self) -> dict:
        return {
            "query_id": self.query_id,
            "language": self.language,
            "gold_label": self.gold_label,
            "status": self.status,
            "stage": self.stage,
            "error": self.error,
            "exemplars": [{"id": i, "score": s} for i, s in self.exemplars],
            "bridge_pair_id": self.bridge_pair_id,
            "alignment_pair_ids": list(self.alignment_pair_ids),
            "prompt_sha256": self.prompt_sha256,
            "candidates": [
                {"label": l, "continuation": c, "logprob": lp} for l, c, lp in self.candidates
            ],
            "predicted_label": self.predicted_label,
            "wall_ms": self.wall_ms,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RunRecord":
        return cls(
            query_id=obj["query_id"],
            language=obj["language"],
            gold_label=obj["gold_label"],
            status=obj["status"],
            stage=obj.get("stage"),
            error=obj.get("error"),
            exemplars=tuple((e["id"], e["score"]) for e in obj.get("exemplars", [])),
            bridge_pair_id=obj.get("bridge_pair_id"),
            alignment_pair_ids=tuple(obj.get("alignment_pair_ids", [])),
            prompt_sha256=obj.get("prompt_sha256"),
            candidates=tuple(
                (c["label"], c["continuation"], c["logprob"]) for c in obj.get("candidates", [])
            ),
            predicted_label=obj.get("predicted_label"),
            wall_ms=obj.get("wall_ms", 0.0),
        )


def records_equal(a: RunRecord, b: RunRecord) -> bool:
    """Structural equality ignoring the timing field."""
    oa, ob = a.to_json_obj(), b.to_json_obj()
    oa.pop("wall_ms")
    ob.pop("wall_ms")
    return oa == ob


def records_to_jsonl(records: Sequence[RunRecord]) -> str:
    return "".join(
        json.dumps(r.to_json_obj(), ensure_ascii=False, separators=(",", ":")) + "\n"
        for r in records
    )


def load_records(path: str | Path) -> list[RunRecord]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(RunRecord.from_json_obj(json.loads(line)))
    return out


@dataclass
class Runtime:
    """Resolved clients for one run; shareable across matrix configs."""

    scorer: Scorer
    embed_fn: EmbedFn | None = None
    mt: IdentityMt | MtClient | None = None


def build_runtime(
    config: InferenceConfig,
    cache_dir: str | Path | None = None,
    shared: dict | None = None,
) -> Runtime:
    """Resolve endpoint specs to clients, reusing shared instances when given."""
    shared = shared if shared is not None else {}

    def get(kind: str, spec, factory):
        if spec is None:
            return None
        key = f"{kind}:{spec}"
        if key not in shared:
            shared[key] = factory()
        return shared[key]

    embed_cache = Path(cache_dir) / "embeddings.bin" if cache_dir else None
    return Runtime(
        scorer=get("scorer", config.scorer, lambda: resolve_scorer(config.scorer)),
        embed_fn=get(
            "embed",
            config.embedder and f"{config.embedder}|{config.embed_provider}",
            lambda: resolve_embedder(config.embedder, config.embed_provider, embed_cache),
        ),
        mt=get("mt", config.mt, lambda: resolve_mt(config.mt)),
    )


def validate_config(config: InferenceConfig, bundle: DatasetBundle) -> None:
    """Static checks of a config against a bundle; raises before any query runs."""
    plan = config.plan
    if plan.task != bundle.task:
        raise ValidationError(f"plan task {plan.task!r} != bundle task {bundle.task!r}")
    label_sets = bundle.label_sets
    label_sets.for_language(plan.source_lang.code)
    if plan.label_config in ("target_only", "label_aligned") or plan.needs_label_aligner():
        label_sets.for_language(plan.target_lang.code)
    if plan.format == "tabular":
        labeled = bundle.labeled_parallel()
        if len(labeled) < plan.shots:
            raise ValidationError(
                f"tabular format needs a labeled parallel store with >= {plan.shots} pairs, "
                f"found {len(labeled)} (Tabular invariant)"
            )
    if plan.alignment == "query" and len(bundle.parallel_store) < plan.align_k:
        raise ValidationError(
            f"query alignment needs {plan.align_k} parallel pairs, store has {len(bundle.parallel_store)}"
        )
    if plan.shots > 0 and plan.format != "tabular":
        if len(bundle.exemplar_store) < plan.shots:
            raise ValidationError(
                f"{plan.shots}-shot plan needs an exemplar store with >= {plan.shots} examples"
            )
        if plan.retrieval.kind == "translate" and not bundle.parallel_store:
            raise ValidationError("translation retrieval needs a non-empty parallel store")
    needs_embeddings = (
        (plan.shots > 0 and plan.format != "tabular" and plan.retrieval.kind in ("mono", "cross"))
        or plan.alignment == "query"
        or plan.format == "tabular"
        or (plan.shots > 0 and plan.retrieval.kind == "translate")
    )
    if needs_embeddings and config.embedder is None:
        raise ValidationError("this plan needs an embedding endpoint (semantic retrieval/alignment)")


def _effective_query(config: InferenceConfig, query: LabeledExample, runtime: Runtime) -> LabeledExample:
    if not config.translate_query:
        return query
    src, tgt = query.language.code, config.plan.source_lang.code
    if query.text is not None:
        (text,) = runtime.mt.translate([query.text], src, tgt)
        return dataclasses.replace(query, text=text)
    premise, hypothesis = runtime.mt.translate([query.premise, query.hypothesis], src, tgt)
    return dataclasses.replace(query, premise=premise, hypothesis=hypothesis)


def run_example(
    config: InferenceConfig,
    query: LabeledExample,
    bundle: DatasetBundle,
    runtime: Runtime | None = None,
) -> RunRecord:
    """Execute translate -> retrieve -> align -> prompt -> score for one query."""
    runtime = runtime or build_runtime(config)
    plan = config.plan
    weights = plan.retrieval.weights or HybridWeights()
    t0 = time.perf_counter()
    stage = "translate"
    try:
        effective = _effective_query(config, query, runtime)
        query_text = effective.content_text()

        stage = "retrieve"
        if plan.format == "tabular" or plan.shots == 0:
            exemplars = RetrievalResult(items=(), strategy=plan.retrieval.kind, seed=plan.retrieval.seed,
                                        prng=PRNG_NAME if plan.retrieval.kind == "random" else None)
        elif plan.retrieval.kind == "random":
            exemplars = retrieve_random(bundle.exemplar_store, plan.shots, plan.retrieval.seed)
        elif plan.retrieval.kind in ("mono", "cross"):
            exemplars = retrieve_semantic(
                query_text, bundle.exemplar_store, plan.shots, runtime.embed_fn, plan.retrieval.kind
            )
        else:  # translate
            exemplars = retrieve_translation(
                query_text, bundle.parallel_store, bundle.exemplar_store, plan.shots,
                weights, runtime.embed_fn,
            )

        stage = "align"
        pairs = []
        if plan.format == "tabular":
            pairs = select_alignment_pairs(
                query_text, bundle.labeled_parallel(), plan.shots, weights, runtime.embed_fn
            )
        elif plan.alignment == "query":
            pairs = select_alignment_pairs(
                query_text, bundle.parallel_store, plan.align_k, weights, runtime.embed_fn
            )

        stage = "prompt"
        prompt_text = assemble_prompt(
            plan,
            [] if plan.format == "tabular" else exemplars,
            pairs,
            effective,
            bundle.label_sets,
        )
        prompt_hash = hashlib.sha256(prompt_text.prompt.encode("utf-8")).hexdigest()

        stage = "score"
        prediction = predict(prompt_text, runtime.scorer, config.mode)
    except TransportError:
        raise  # an unreachable endpoint is not a data failure; abort the run
    except Exception as exc:  # degenerate rows must not kill the run
        return RunRecord(
            query_id=query.id,
            language=query.language.code,
            gold_label=query.label,
            status="failed",
            stage=stage,
            error=f"{type(exc).__name__}: {exc}",
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )
    return RunRecord(
        query_id=query.id,
        language=query.language.code,
        gold_label=query.label,
        exemplars=tuple((ex.id, score) for ex, score in exemplars.items),
        bridge_pair_id=exemplars.bridge_pair_id,
        alignment_pair_ids=tuple(p.id for p in pairs),
        prompt_sha256=prompt_hash,
        candidates=tuple((s.label, s.continuation, s.logprob) for s in prediction.scores),
        predicted_label=prediction.label,
        wall_ms=(time.perf_counter() - t0) * 1000.0,
    )


def run_dataset(
    config: InferenceConfig,
    bundle: DatasetBundle,
    runtime: Runtime | None = None,
    workers: int = DEFAULT_WORKERS,
) -> list[RunRecord]:
    """Records for every eval query, emitted in input order."""
    if not bundle.eval_set:
        raise ValidationError("the bundle has an empty eval set")
    validate_config(config, bundle)
    runtime = runtime or build_runtime(config)
    if workers <= 1:
        return [run_example(config, q, bundle, runtime) for q in bundle.eval_set]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_example, config, q, bundle, runtime) for q in bundle.eval_set]
        return [f.result() for f in futures]


def run_matrix(
    configs: Sequence[InferenceConfig],
    bundle: DatasetBundle,
    workers: int = DEFAULT_WORKERS,
    cache_dir: str | Path | None = None,
) -> dict[str, dict]:
    """Run every config, sharing clients and caches; missing label sets skip the config."""
    ids = [c.run_id for c in configs]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate run_id in matrix configs")
    shared: dict = {}
    out: dict[str, dict] = {}
    for config in configs:
        try:
            validate_config(config, bundle)
        except MissingLabelSetError as exc:
            out[config.run_id] = {"status": "skipped", "reason": str(exc), "records": []}
            continue
        runtime = build_runtime(config, cache_dir=cache_dir, shared=shared)
        records = run_dataset(config, bundle, runtime=runtime, workers=workers)
        out[config.run_id] = {"status": "ok", "reason": None, "records": records}
    return out


def matrix_summary(matrix: dict[str, dict]) -> dict:
    return {
        run_id: {
            "status": entry["status"],
            "reason": entry["reason"],
            "records": len(entry["records"]),
            "failures": sum(1 for r in entry["records"] if r.status == "failed"),
        }
        for run_id, entry in matrix.items()
    }

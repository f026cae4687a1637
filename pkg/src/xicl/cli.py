"""Single entry point: ingest / retrieve / prompt / run / eval / report.

Endpoint precedence is CLI flag > environment variable > config file > default.
Environment variables: SCORER_URL, EMBED_URL, MT_URL, XICL_CACHE_DIR. Offline
endpoint forms ("mock:0", "chain:0", "hash:64", "identity") keep every
subcommand usable without a network. Exit codes: 0 success, 1 validation
errors, 2 transport errors.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    DatasetBundle,
    bundle_hashes,
    language,
    load_bundle,
    load_labeled,
    load_parallel,
    write_bundle,
)
from .errors import TransportError, ValidationError, XiclError
from .evaluation import delta_report, emit, eval_report
from .pipeline import (
    InferenceConfig,
    load_records,
    matrix_summary,
    records_to_jsonl,
    run_matrix,
)
from .prompt import PromptPlan, assemble_prompt
from .retrieval import (
    RetrievalStrategy,
    retrieve_random,
    retrieve_semantic,
    retrieve_translation,
)
from .similarity import HybridWeights


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="xicl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"xicl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate datasets and write a bundle directory")
    p.add_argument("--task", required=True, choices=("sentiment", "topic", "nli"))
    p.add_argument("--exemplars", help="JSONL labeled exemplar store")
    p.add_argument("--parallel", help="JSONL parallel sentence-pair store")
    p.add_argument("--eval", dest="eval_path", help="JSONL evaluation set")
    p.add_argument("--out", required=True, help="bundle output directory")

    p = sub.add_parser("retrieve", help="retrieve exemplars for a query text")
    p.add_argument("--strategy", required=True, choices=("random", "mono", "cross", "translate"))
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--query-file", required=True, help="file containing the query text")
    p.add_argument("--bundle", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--weights", help="hybrid weights as w_embed,w_tfidf,w_bow")
    p.add_argument("--embed-url", default=None)
    p.add_argument("--embed-provider", default="default")

    p = sub.add_parser("prompt", help="assemble a prompt for one eval query (no scorer contact)")
    p.add_argument("--plan", required=True, help="JSON file with PromptPlan fields")
    p.add_argument("--query-id", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--dry-run", action="store_true", default=True)
    p.add_argument("--embed-url", default=None)
    p.add_argument("--embed-provider", default="default")

    p = sub.add_parser("run", help="run one or more inference configs over a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--config", help="JSON config file (single object or {'configs': [...]})")
    p.add_argument("--out", required=True, help="output directory for records and manifest")
    p.add_argument("--run-id", default=None)
    p.add_argument("--scorer-url", default=None)
    p.add_argument("--mock-scorer", action="store_true")
    p.add_argument("--embed-url", default=None)
    p.add_argument("--embed-provider", default=None)
    p.add_argument("--mt-url", default=None)
    p.add_argument("--translate-query", action="store_true", default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="seed for random retrieval")
    p.add_argument("--strategy", choices=("random", "mono", "cross", "translate"), default=None)
    p.add_argument("--format", dest="fmt", choices=("align_after", "align_before", "tabular"), default=None)
    p.add_argument("--label-config", choices=("source_only", "target_only", "label_aligned"), default=None)
    p.add_argument("--alignment", choices=("none", "label", "query"), default=None)
    p.add_argument("--align-k", type=int, default=None)
    p.add_argument("--source-lang", default=None)
    p.add_argument("--target-lang", default=None)
    p.add_argument("--mode", choices=("sum", "mean"), default=None)
    p.add_argument("--weights", default=None)
    p.add_argument("--workers", type=int, default=4)

    p = sub.add_parser("eval", help="compute metric reports from run records")
    p.add_argument("--records", required=True)
    p.add_argument("--baseline", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--format", dest="formats", default="csv,json,tsv")

    p = sub.add_parser("report", help="delta report (treatment vs baseline) artifacts")
    p.add_argument("--records", required=True, help="treatment records JSONL")
    p.add_argument("--baseline", required=True, help="baseline records JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--format", dest="formats", default="csv,json,tsv")

    return parser


def _env(name: str) -> str | None:
    value = os.environ.get(name)
    return value if value else None


def _cmd_ingest(args) -> int:
    exemplars = load_labeled(args.exemplars, args.task) if args.exemplars else []
    parallel = load_parallel(args.parallel) if args.parallel else []
    eval_set = load_labeled(args.eval_path, args.task) if args.eval_path else []
    bundle = DatasetBundle(
        task=args.task, exemplar_store=exemplars, parallel_store=parallel, eval_set=eval_set
    )
    manifest = write_bundle(bundle, args.out)
    print(json.dumps(manifest, indent=2, ensure_ascii=False))
    return 0


def _embed_fn_from(args, cache_dir: str | None):
    from .pipeline import resolve_embedder

    spec = getattr(args, "embed_url", None) or _env("EMBED_URL") or "hash:64:0"
    provider = getattr(args, "embed_provider", None) or "default"
    cache_path = Path(cache_dir) / "embeddings.bin" if cache_dir else None
    return resolve_embedder(spec, provider, cache_path)


def _cmd_retrieve(args) -> int:
    bundle = load_bundle(args.bundle)
    query_text = Path(args.query_file).read_text(encoding="utf-8").strip()
    weights = HybridWeights.parse(args.weights) if args.weights else HybridWeights()
    if args.strategy == "random":
        if args.seed is None:
            raise ValidationError("random retrieval requires --seed")
        result = retrieve_random(bundle.exemplar_store, args.k, args.seed)
    elif args.strategy in ("mono", "cross"):
        embed_fn = _embed_fn_from(args, _env("XICL_CACHE_DIR"))
        result = retrieve_semantic(query_text, bundle.exemplar_store, args.k, embed_fn, args.strategy)
    else:
        embed_fn = _embed_fn_from(args, _env("XICL_CACHE_DIR"))
        result = retrieve_translation(
            query_text, bundle.parallel_store, bundle.exemplar_store, args.k, weights, embed_fn
        )
    print(json.dumps(result.to_json_obj(), indent=2, ensure_ascii=False))
    return 0


def _plan_from_obj(obj: dict, bundle: DatasetBundle | None = None) -> PromptPlan:
    defaults = {
        "task": bundle.task if bundle else obj.get("task"),
        "source_lang": "eng",
        "target_lang": None,
        "shots": 3,
        "alignment": "none",
        "align_k": 3,
        "format": "align_after",
        "label_config": "source_only",
        "exemplar_order": "similar_last",
        "byte_limit": 32 * 1024,
    }
    merged = {**defaults, **{k: v for k, v in obj.items() if v is not None}}
    target = merged["target_lang"]
    if target is None and bundle is not None and bundle.eval_language is not None:
        target = bundle.eval_language.code
    if target is None:
        raise ValidationError("plan needs a target_lang (or a bundle with an eval set)")
    retrieval_obj = merged.get("retrieval") or {}
    if isinstance(retrieval_obj, RetrievalStrategy):
        strategy = retrieval_obj
    else:
        kind = retrieval_obj.get("kind", "mono")
        weights = retrieval_obj.get("weights")
        strategy = RetrievalStrategy(
            kind=kind,
            seed=retrieval_obj.get("seed"),
            weights=HybridWeights(*weights) if weights else None,
        )
    return PromptPlan(
        task=merged["task"],
        source_lang=language(merged["source_lang"]),
        target_lang=language(target),
        shots=merged["shots"],
        alignment=merged["alignment"],
        align_k=merged["align_k"],
        format=merged["format"],
        label_config=merged["label_config"],
        retrieval=strategy,
        exemplar_order=merged["exemplar_order"],
        byte_limit=merged["byte_limit"],
    )


def _cmd_prompt(args) -> int:
    bundle = load_bundle(args.bundle)
    plan_obj = json.loads(Path(args.plan).read_text(encoding="utf-8"))
    plan = _plan_from_obj(plan_obj, bundle)
    query = next((q for q in bundle.eval_set if q.id == args.query_id), None)
    if query is None:
        raise ValidationError(f"query id {args.query_id!r} is not in the bundle eval set")
    config = InferenceConfig(
        run_id="dry-run",
        plan=plan,
        scorer="mock:0",
        embedder=getattr(args, "embed_url", None) or _env("EMBED_URL") or "hash:64:0",
        embed_provider=args.embed_provider,
    )
    from .pipeline import Runtime, validate_config

    validate_config(config, bundle)
    runtime = Runtime(scorer=None, embed_fn=_embed_fn_from(args, _env("XICL_CACHE_DIR")))
    record = _assemble_only(config, query, bundle, runtime)
    print(record["prompt"])
    print()
    print("candidates:")
    for label, cont in record["candidates"]:
        print(f"  {label} -> {cont!r}")
    return 0


def _assemble_only(config, query, bundle, runtime) -> dict:
    """Prompt assembly without scoring, reusing the pipeline's stage logic."""
    from .retrieval import RetrievalResult as _RR
    from .retrieval import select_alignment_pairs

    plan = config.plan
    weights = plan.retrieval.weights or HybridWeights()
    query_text = query.content_text()
    if plan.format == "tabular" or plan.shots == 0:
        exemplars = _RR(items=(), strategy=plan.retrieval.kind, seed=plan.retrieval.seed)
    elif plan.retrieval.kind == "random":
        exemplars = retrieve_random(bundle.exemplar_store, plan.shots, plan.retrieval.seed)
    elif plan.retrieval.kind in ("mono", "cross"):
        exemplars = retrieve_semantic(
            query_text, bundle.exemplar_store, plan.shots, runtime.embed_fn, plan.retrieval.kind
        )
    else:
        exemplars = retrieve_translation(
            query_text, bundle.parallel_store, bundle.exemplar_store, plan.shots, weights,
            runtime.embed_fn,
        )
    pairs = []
    if plan.format == "tabular":
        pairs = select_alignment_pairs(
            query_text, bundle.labeled_parallel(), plan.shots, weights, runtime.embed_fn
        )
    elif plan.alignment == "query":
        pairs = select_alignment_pairs(
            query_text, bundle.parallel_store, plan.align_k, weights, runtime.embed_fn
        )
    prompt_text = assemble_prompt(
        plan, [] if plan.format == "tabular" else exemplars, pairs, query, bundle.label_sets
    )
    return {"prompt": prompt_text.prompt, "candidates": list(prompt_text.candidates)}


def load_config(path: str | Path | None, args=None, bundle: DatasetBundle | None = None) -> list[InferenceConfig]:
    """Config objects from a JSON file, with flag > env > file > default precedence."""
    raw_configs: list[dict]
    if path is None:
        raw_configs = [{}]
    else:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        raw_configs = obj["configs"] if isinstance(obj, dict) and "configs" in obj else [obj]

    def pick(flag_value, env_name: str | None, file_value, default):
        if flag_value is not None:
            return flag_value
        if env_name:
            env_value = _env(env_name)
            if env_value is not None:
                return env_value
        if file_value is not None:
            return file_value
        return default

    configs = []
    for i, raw in enumerate(raw_configs):
        plan_obj = dict(raw.get("plan") or {})
        if args is not None:
            for flag, key in (
                ("shots", "shots"),
                ("fmt", "format"),
                ("label_config", "label_config"),
                ("alignment", "alignment"),
                ("align_k", "align_k"),
                ("source_lang", "source_lang"),
                ("target_lang", "target_lang"),
            ):
                value = getattr(args, flag, None)
                if value is not None:
                    plan_obj[key] = value
            if getattr(args, "strategy", None) is not None or getattr(args, "seed", None) is not None:
                retrieval = dict(plan_obj.get("retrieval") or {})
                if getattr(args, "strategy", None) is not None:
                    retrieval["kind"] = args.strategy
                if getattr(args, "seed", None) is not None:
                    retrieval["seed"] = args.seed
                    retrieval.setdefault("kind", "random")
                if getattr(args, "weights", None):
                    retrieval["weights"] = [float(x) for x in args.weights.split(",")]
                plan_obj["retrieval"] = retrieval
        plan = _plan_from_obj(plan_obj, bundle)

        mock_flag = bool(getattr(args, "mock_scorer", False)) if args is not None else False
        scorer_flag = getattr(args, "scorer_url", None) if args is not None else None
        if mock_flag:
            scorer = f"mock:{getattr(args, 'seed', None) or 0}"
        else:
            scorer = pick(scorer_flag, "SCORER_URL", raw.get("scorer"), "mock:0")
        embedder = pick(
            getattr(args, "embed_url", None) if args is not None else None,
            "EMBED_URL",
            raw.get("embedder"),
            "hash:64:0",
        )
        mt = pick(
            getattr(args, "mt_url", None) if args is not None else None,
            "MT_URL",
            raw.get("mt"),
            None,
        )
        translate_flag = getattr(args, "translate_query", None) if args is not None else None
        translate_query = bool(
            translate_flag if translate_flag is not None else raw.get("translate_query", False)
        )
        run_id = (getattr(args, "run_id", None) if args is not None else None) or raw.get(
            "run_id", f"run-{i}"
        )
        configs.append(
            InferenceConfig(
                run_id=run_id,
                plan=plan,
                scorer=scorer,
                embedder=embedder,
                embed_provider=pick(
                    getattr(args, "embed_provider", None) if args is not None else None,
                    None,
                    raw.get("embed_provider"),
                    "default",
                ),
                mt=mt,
                translate_query=translate_query,
                mode=pick(
                    getattr(args, "mode", None) if args is not None else None,
                    None,
                    raw.get("mode"),
                    "sum",
                ),
                metadata=dict(raw.get("metadata") or {}),
            )
        )
    return configs


def _cmd_run(args) -> int:
    bundle = load_bundle(args.bundle)
    configs = load_config(args.config, args, bundle)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = _env("XICL_CACHE_DIR")
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    matrix = run_matrix(configs, bundle, workers=args.workers, cache_dir=cache_dir)
    finished = datetime.datetime.now(datetime.timezone.utc).isoformat()
    for run_id, entry in matrix.items():
        if entry["records"]:
            (out_dir / f"{run_id}.records.jsonl").write_text(
                records_to_jsonl(entry["records"]), encoding="utf-8"
            )
    manifest = {
        "tool_version": __version__,
        "started_at": started,
        "finished_at": finished,
        "bundle": str(args.bundle),
        "bundle_hashes": bundle_hashes(args.bundle),
        "configs": [c.to_json_obj() for c in configs],
        "results": matrix_summary(matrix),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(json.dumps(manifest["results"], indent=2))
    return 0


def _cmd_eval(args) -> int:
    records = load_records(args.records)
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    if args.baseline:
        report = delta_report(load_records(args.baseline), records)
        written = emit(report, args.out, formats, name="delta")
    else:
        report = eval_report(records)
        written = emit(report, args.out, formats, name="metrics")
    for path in written:
        print(path)
    return 0


def _cmd_report(args) -> int:
    treatment = load_records(args.records)
    baseline = load_records(args.baseline)
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    report = delta_report(baseline, treatment)
    for path in emit(report, args.out, formats, name="delta"):
        print(path)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "retrieve": _cmd_retrieve,
    "prompt": _cmd_prompt,
    "run": _cmd_run,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 2
    except XiclError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

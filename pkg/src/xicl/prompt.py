"""Prompt rendering: aligner sentences, exemplar blocks, and full assembly.

Template choices pinned here (and by the golden tests): exemplars render as
"Text: {text}\\nLabel: {label}" (NLI uses Premise/Hypothesis lines), blocks are
separated by one blank line, the query block ends in "Label: " with a single
trailing space, and candidate continuations carry no leading space. The tabular
format renders a pipe-delimited table whose rows are labeled parallel pairs and
whose query row leaves the source and label cells empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import LabelSet, LabeledExample, LanguageTag, ParallelPair
from .errors import PromptTooLargeError, ValidationError
from .retrieval import RetrievalResult, RetrievalStrategy

FORMATS = ("align_after", "align_before", "tabular")
LABEL_CONFIGS = ("source_only", "target_only", "label_aligned")
ALIGNMENTS = ("none", "label", "query")

BLOCK_SEPARATOR = "\n\n"
TABLE_HEADER = "Source | Target | Label"
DEFAULT_BYTE_LIMIT = 32 * 1024
TEMPLATE_VERSION = "xicl-templates-v1"  # bump when any pinned template string changes


@dataclass(frozen=True)
class PromptPlan:
    task: str
    source_lang: LanguageTag
    target_lang: LanguageTag
    shots: int = 3
    alignment: str = "none"
    align_k: int = 3
    format: str = "align_after"
    label_config: str = "source_only"
    retrieval: RetrievalStrategy = field(default_factory=lambda: RetrievalStrategy("mono"))
    exemplar_order: str = "similar_last"  # or "retrieved"
    byte_limit: int = DEFAULT_BYTE_LIMIT

    def __post_init__(self):
        if self.shots < 0:
            raise ValidationError("shots must be >= 0")
        if self.alignment not in ALIGNMENTS:
            raise ValidationError(f"unknown alignment {self.alignment!r}")
        if self.format not in FORMATS:
            raise ValidationError(f"unknown format {self.format!r}")
        if self.label_config not in LABEL_CONFIGS:
            raise ValidationError(f"unknown label config {self.label_config!r}")
        if self.exemplar_order not in ("similar_last", "retrieved"):
            raise ValidationError(f"unknown exemplar order {self.exemplar_order!r}")
        if self.alignment == "query" and self.align_k < 1:
            raise ValidationError("query alignment needs align_k >= 1")
        if self.format == "tabular" and self.shots < 1:
            raise ValidationError("tabular format needs at least one parallel row (shots >= 1)")

    def needs_label_aligner(self) -> bool:
        return self.label_config == "label_aligned" or self.alignment == "label"

    def needs_alignment_pairs(self) -> bool:
        return (self.alignment == "query" and self.format != "tabular") or self.format == "tabular"

    def to_json_obj(self) -> dict:
        return {
            "task": self.task,
            "source_lang": self.source_lang.code,
            "target_lang": self.target_lang.code,
            "shots": self.shots,
            "alignment": self.alignment,
            "align_k": self.align_k,
            "format": self.format,
            "label_config": self.label_config,
            "retrieval": {
                "kind": self.retrieval.kind,
                "seed": self.retrieval.seed,
                "weights": None
                if self.retrieval.weights is None
                else [
                    self.retrieval.weights.w_embed,
                    self.retrieval.weights.w_tfidf,
                    self.retrieval.weights.w_bow,
                ],
            },
            "exemplar_order": self.exemplar_order,
            "byte_limit": self.byte_limit,
        }


@dataclass(frozen=True)
class Segment:
    kind: str  # exemplar | alignment | query
    text: str  # exact span, separators included
    label_slots: tuple[str, ...] = ()


@dataclass(frozen=True)
class PromptText:
    prompt: str
    candidates: tuple[tuple[str, str], ...]  # (canonical label, continuation)
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if "".join(s.text for s in self.segments) != self.prompt:
            raise ValidationError("segment concatenation does not reproduce the prompt")
        if not self.candidates:
            raise ValidationError("a prompt must offer at least one candidate")

    def label_slots(self) -> list[str]:
        slots: list[str] = []
        for seg in self.segments:
            slots.extend(seg.label_slots)
        return slots


def _aligner_sentence(display_name: str, clauses: Sequence[str]) -> str:
    if len(clauses) == 1:
        return f"In {display_name}, {clauses[0]}"
    head = ", ".join(clauses[:-1])
    return f"In {display_name}, {head}, and {clauses[-1]}"


def render_label_aligner(
    target_lang: LanguageTag,
    source_labels: Sequence[str],
    target_labels: Sequence[str],
) -> str:
    """The label-aligner sentence translating each source label to the target language."""
    if len(source_labels) != len(target_labels):
        raise ValidationError(
            f"label aligner needs index-aligned lists, got {len(source_labels)} vs {len(target_labels)}"
        )
    if not source_labels:
        raise ValidationError("label aligner needs at least one label pair")
    clauses = [f"{s} means {t}" for s, t in zip(source_labels, target_labels)]
    return _aligner_sentence(target_lang.display_name, clauses)


def render_query_aligner(target_lang: LanguageTag, pairs: Sequence[ParallelPair]) -> str:
    """The query-aligner sentence translating parallel sentences similar to the query."""
    if not pairs:
        raise ValidationError("query aligner needs at least one parallel pair")
    for pair in pairs:
        if pair.target_lang.code != target_lang.code:
            raise ValidationError(
                f"pair {pair.id!r} targets {pair.target_lang.code!r}, expected {target_lang.code!r}"
            )
    clauses = [f"{p.source_text} means {p.target_text}" for p in pairs]
    return _aligner_sentence(target_lang.display_name, clauses)


def render_exemplar(task: str, example: LabeledExample, label_string: str) -> str:
    if task == "nli":
        return f"Premise: {example.premise}\nHypothesis: {example.hypothesis}\nLabel: {label_string}"
    return f"Text: {example.text}\nLabel: {label_string}"


def render_query(task: str, example: LabeledExample) -> str:
    if task == "nli":
        return f"Premise: {example.premise}\nHypothesis: {example.hypothesis}\nLabel: "
    return f"Text: {example.text}\nLabel: "


def _slot_labels(plan: PromptPlan, label_sets: LabelSet) -> tuple[list[str], list[str] | None]:
    """Returns (strings used in label slots and candidates, source strings if needed)."""
    source_labels = label_sets.for_language(plan.source_lang.code)
    if plan.label_config == "source_only":
        slots = source_labels
    else:
        slots = label_sets.for_language(plan.target_lang.code)
    return slots, source_labels


def assemble_prompt(
    plan: PromptPlan,
    exemplars: RetrievalResult | Sequence[LabeledExample],
    alignment_pairs: Sequence[ParallelPair],
    query: LabeledExample,
    label_sets: LabelSet,
) -> PromptText:
    """Assemble the full prompt and candidate list for one query under a plan."""
    examples = exemplars.examples() if isinstance(exemplars, RetrievalResult) else list(exemplars)
    alignment_pairs = list(alignment_pairs)

    if plan.needs_alignment_pairs():
        if not alignment_pairs:
            raise ValidationError(f"plan ({plan.format}, {plan.alignment}) requires alignment pairs")
    elif alignment_pairs:
        raise ValidationError("alignment pairs supplied but the plan does not use them")

    slots, source_labels = _slot_labels(plan, label_sets)
    candidates = tuple(zip(label_sets.canonical, slots))

    aligner_blocks: list[Segment] = []
    if plan.needs_label_aligner():
        target_labels = label_sets.for_language(plan.target_lang.code)
        text = render_label_aligner(plan.target_lang, source_labels, target_labels)
        aligner_blocks.append(Segment("alignment", text))
    if plan.alignment == "query" and plan.format != "tabular":
        text = render_query_aligner(plan.target_lang, alignment_pairs)
        aligner_blocks.append(Segment("alignment", text))

    if plan.format == "tabular":
        if examples:
            raise ValidationError("tabular format renders parallel rows; exemplars must be empty")
        unlabeled = [p.id for p in alignment_pairs if p.label is None]
        if unlabeled:
            raise ValidationError(
                f"tabular format requires labeled parallel pairs; unlabeled: {unlabeled}"
            )
        rows, row_slots = [TABLE_HEADER], []
        for pair in alignment_pairs:
            slot = slots[label_sets.index_of(pair.label)]
            rows.append(f"{pair.source_text} | {pair.target_text} | {slot}")
            row_slots.append(slot)
        table = Segment("exemplar", "\n".join(rows), tuple(row_slots))
        query_seg = Segment("query", f"\n| {query.content_text()} | ")
        segments = _join_segments(aligner_blocks + [table]) + [query_seg]
    else:
        if len(examples) != plan.shots:
            raise ValidationError(f"plan asks for {plan.shots} shots but got {len(examples)} exemplars")
        ordered = list(reversed(examples)) if plan.exemplar_order == "similar_last" else examples
        exemplar_blocks = []
        for ex in ordered:
            slot = slots[label_sets.index_of(ex.label)]
            exemplar_blocks.append(Segment("exemplar", render_exemplar(plan.task, ex, slot), (slot,)))
        query_block = Segment("query", render_query(plan.task, query))
        if plan.format == "align_after":
            blocks = exemplar_blocks + aligner_blocks + [query_block]
        else:  # align_before
            blocks = aligner_blocks + exemplar_blocks + [query_block]
        segments = _join_segments(blocks)

    prompt = "".join(seg.text for seg in segments)
    nbytes = len(prompt.encode("utf-8"))
    if nbytes > plan.byte_limit:
        raise PromptTooLargeError(f"assembled prompt is {nbytes} bytes, limit {plan.byte_limit}")
    return PromptText(prompt=prompt, candidates=candidates, segments=tuple(segments))


def _join_segments(blocks: list[Segment]) -> list[Segment]:
    """Fold the blank-line separator into each non-first segment's span."""
    out: list[Segment] = []
    for i, seg in enumerate(blocks):
        if i == 0:
            out.append(seg)
        else:
            out.append(Segment(seg.kind, BLOCK_SEPARATOR + seg.text, seg.label_slots))
    return out

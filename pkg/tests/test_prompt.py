from __future__ import annotations

from pathlib import Path

import pytest

from fixtures import (
    GOLDEN_EXEMPLARS,
    GOLDEN_QUERY,
    GOLDEN_QUERY_PAIRS,
    GOLDEN_TABULAR_PAIRS,
    golden_plan,
    golden_prompt,
)
from xicl.corpus import LabeledExample, ParallelPair, label_map, label_set, language
from xicl.errors import MissingLabelSetError, PromptTooLargeError, ValidationError
from xicl.prompt import (
    PromptPlan,
    PromptText,
    Segment,
    assemble_prompt,
    render_exemplar,
    render_label_aligner,
    render_query,
    render_query_aligner,
)
from xicl.retrieval import RetrievalStrategy

ENG = language("eng")
HAU = language("hau")
FRA = language("fra")

GOLDEN_DIR = Path(__file__).parent / "golden"

HAUSA_TOPIC_ALIGNER = (
    "In Hausa, business means kasuwanci, entertainment means nishadi, "
    "health means lafiya, politics means siyasa, religion means addini, "
    "sports means wasanni, and technology means fasaha"
)


class TestLabelAligner:
    def test_hausa_topic_exact(self):
        got = render_label_aligner(HAU, label_map("topic", "eng"), label_map("topic", "hau"))
        assert got == HAUSA_TOPIC_ALIGNER

    def test_single_pair_degenerate(self):
        assert render_label_aligner(FRA, ["positive"], ["positif"]) == "In French, positive means positif"

    def test_two_pairs_no_serial_comma_ambiguity(self):
        got = render_label_aligner(FRA, ["good", "bad"], ["bon", "mauvais"])
        assert got == "In French, good means bon, and bad means mauvais"

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            render_label_aligner(FRA, ["a", "b", "c"], ["x", "y"])

    def test_empty_lists(self):
        with pytest.raises(ValidationError):
            render_label_aligner(FRA, [], [])


def _pair(id_, src, tgt, tgt_lang=FRA):
    return ParallelPair(
        id=id_, source_text=src, target_text=tgt, source_lang=ENG, target_lang=tgt_lang
    )


class TestQueryAligner:
    def test_single_pair(self):
        got = render_query_aligner(FRA, [_pair("1", "good", "bon")])
        assert got == "In French, good means bon"

    def test_two_pairs(self):
        got = render_query_aligner(FRA, [_pair("1", "good", "bon"), _pair("2", "bad", "mauvais")])
        assert got == "In French, good means bon, and bad means mauvais"

    def test_wrong_target_lang(self):
        with pytest.raises(ValidationError):
            render_query_aligner(HAU, [_pair("1", "good", "bon", tgt_lang=FRA)])

    def test_empty(self):
        with pytest.raises(ValidationError):
            render_query_aligner(FRA, [])


class TestExemplarTemplates:
    def test_sentiment(self):
        ex = LabeledExample(id="1", text="ina son shi", label="positive", language=HAU)
        assert render_exemplar("sentiment", ex, "positive") == "Text: ina son shi\nLabel: positive"

    def test_nli_query_trailing_space(self):
        ex = LabeledExample(id="1", premise="p", hypothesis="h", label="neutral", language=ENG)
        assert render_query("nli", ex) == "Premise: p\nHypothesis: h\nLabel: "

    def test_topic_with_hausa_label(self):
        ex = GOLDEN_EXEMPLARS[0]
        got = render_exemplar("topic", ex, "kasuwanci")
        assert got.endswith("\nLabel: kasuwanci")


def _plan(**kwargs) -> PromptPlan:
    base = dict(
        task="topic",
        source_lang=ENG,
        target_lang=HAU,
        shots=3,
        alignment="none",
        format="align_after",
        label_config="source_only",
        retrieval=RetrievalStrategy("mono"),
    )
    base.update(kwargs)
    return PromptPlan(**base)


class TestAssemble:
    def test_zero_shot_bare_query(self):
        plan = _plan(shots=0)
        got = assemble_prompt(plan, [], [], GOLDEN_QUERY, label_set("topic"))
        assert got.prompt == "Text: kasuwa ta tashi a yau\nLabel: "
        assert [s.kind for s in got.segments] == ["query"]

    def test_after_vs_before_same_segments_different_order(self):
        after = golden_prompt("align_after", "source_only")
        before = golden_prompt("align_before", "source_only")

        def key(seg: Segment):
            return (seg.kind, seg.text.removeprefix("\n\n"), seg.label_slots)

        assert sorted(map(key, after.segments)) == sorted(map(key, before.segments))
        assert [s.kind for s in after.segments] != [s.kind for s in before.segments]
        assert [s.kind for s in after.segments] == ["exemplar", "exemplar", "exemplar", "alignment", "query"]
        assert [s.kind for s in before.segments] == ["alignment", "exemplar", "exemplar", "exemplar", "query"]

    def test_equal_length_after_before(self):
        for config in ("source_only", "target_only", "label_aligned"):
            after = golden_prompt("align_after", config)
            before = golden_prompt("align_before", config)
            assert len(after.prompt) == len(before.prompt)

    def test_label_aligned_contains_exact_aligner_and_candidates(self):
        got = golden_prompt("align_after", "label_aligned")
        assert HAUSA_TOPIC_ALIGNER in got.prompt
        assert [c for _, c in got.candidates] == label_map("topic", "hau")
        assert [l for l, _ in got.candidates] == label_map("topic", "eng")

    def test_segment_concat_identity_all_combos(self):
        for fmt in ("align_after", "align_before", "tabular"):
            for config in ("source_only", "target_only", "label_aligned"):
                got = golden_prompt(fmt, config)
                assert "".join(s.text for s in got.segments) == got.prompt

    def test_candidate_count_and_order(self):
        got = golden_prompt("align_after", "source_only")
        assert len(got.candidates) == 7
        assert [l for l, _ in got.candidates] == label_map("topic", "eng")
        assert [c for _, c in got.candidates] == label_map("topic", "eng")

    def test_label_config_purity(self):
        source_labels = set(label_map("topic", "eng"))
        target_labels = set(label_map("topic", "hau"))
        for fmt in ("align_after", "align_before", "tabular"):
            slots_src = set(golden_prompt(fmt, "source_only").label_slots())
            assert slots_src & target_labels == set()
            slots_tgt = set(golden_prompt(fmt, "target_only").label_slots())
            assert slots_tgt & source_labels == set()

    def test_golden_files_byte_exact(self):
        for fmt in ("align_after", "align_before", "tabular"):
            for config in ("source_only", "target_only", "label_aligned"):
                path = GOLDEN_DIR / f"prompt_{fmt}_{config}.txt"
                assert golden_prompt(fmt, config).prompt == path.read_text(encoding="utf-8")

    def test_exemplar_count_must_match_shots(self):
        plan = _plan(shots=2)
        with pytest.raises(ValidationError):
            assemble_prompt(plan, GOLDEN_EXEMPLARS, [], GOLDEN_QUERY, label_set("topic"))

    def test_alignment_pairs_present_iff_required(self):
        plan = _plan(shots=0)
        with pytest.raises(ValidationError):
            assemble_prompt(plan, [], GOLDEN_QUERY_PAIRS, GOLDEN_QUERY, label_set("topic"))
        plan_query = _plan(shots=0, alignment="query", align_k=2)
        with pytest.raises(ValidationError):
            assemble_prompt(plan_query, [], [], GOLDEN_QUERY, label_set("topic"))

    def test_zero_shot_with_query_alignment(self):
        plan = _plan(shots=0, alignment="query", align_k=2)
        got = assemble_prompt(plan, [], GOLDEN_QUERY_PAIRS, GOLDEN_QUERY, label_set("topic"))
        assert [s.kind for s in got.segments] == ["alignment", "query"]

    def test_tabular_rejects_unlabeled_pairs(self):
        plan = _plan(format="tabular")
        unlabeled = [_pair("u1", "a", "b", tgt_lang=HAU)] * 1 + GOLDEN_TABULAR_PAIRS[:2]
        with pytest.raises(ValidationError, match="u1"):
            assemble_prompt(plan, [], unlabeled, GOLDEN_QUERY, label_set("topic"))

    def test_tabular_rejects_exemplars(self):
        plan = _plan(format="tabular")
        with pytest.raises(ValidationError):
            assemble_prompt(
                plan, GOLDEN_EXEMPLARS, GOLDEN_TABULAR_PAIRS, GOLDEN_QUERY, label_set("topic")
            )

    def test_tabular_query_row_shape(self):
        got = golden_prompt("tabular", "source_only")
        assert got.prompt.startswith("Source | Target | Label\n")
        assert got.prompt.endswith("\n| kasuwa ta tashi a yau | ")

    def test_missing_target_labels_propagate(self):
        plan = _plan(target_lang=language("amh"), label_config="target_only")
        with pytest.raises(MissingLabelSetError):
            assemble_prompt(plan, GOLDEN_EXEMPLARS, [], GOLDEN_QUERY, label_set("topic"))

    def test_byte_limit(self):
        plan = _plan(shots=0, byte_limit=10)
        with pytest.raises(PromptTooLargeError):
            assemble_prompt(plan, [], [], GOLDEN_QUERY, label_set("topic"))

    def test_rendering_pure_function(self):
        a = golden_prompt("align_after", "label_aligned").prompt
        b = golden_prompt("align_after", "label_aligned").prompt
        assert a == b

    def test_exemplar_order_flag(self):
        plan = _plan(exemplar_order="retrieved")
        got = assemble_prompt(plan, GOLDEN_EXEMPLARS, [], GOLDEN_QUERY, label_set("topic"))
        first_block = got.segments[0].text
        assert "stock market" in first_block  # retrieved order keeps e1 first

    def test_prompt_text_invariant_enforced(self):
        with pytest.raises(ValidationError):
            PromptText(prompt="abc", candidates=(("x", "x"),), segments=(Segment("query", "ab"),))
        with pytest.raises(ValidationError):
            PromptText(prompt="ab", candidates=(), segments=(Segment("query", "ab"),))


class TestPlanValidation:
    def test_tabular_needs_rows(self):
        with pytest.raises(ValidationError):
            _plan(format="tabular", shots=0)

    def test_negative_shots(self):
        with pytest.raises(ValidationError):
            _plan(shots=-1)

    def test_unknown_enum_values(self):
        with pytest.raises(ValidationError):
            _plan(format="sideways")
        with pytest.raises(ValidationError):
            _plan(label_config="mixed")
        with pytest.raises(ValidationError):
            _plan(alignment="both")

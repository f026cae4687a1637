"""Shared fixture builders: toy bundles and the golden-prompt inputs."""

from __future__ import annotations

from xicl.corpus import DatasetBundle, LabeledExample, ParallelPair, language

ENG = language("eng")
HAU = language("hau")
FRA = language("fra")
BZD = language("bzd")
SPA = language("spa")


def _ex(id_, text, label, lang=ENG):
    return LabeledExample(id=id_, text=text, label=label, language=lang)


def _pair(id_, src, tgt, label=None, src_lang=ENG, tgt_lang=HAU):
    return ParallelPair(
        id=id_, source_text=src, target_text=tgt,
        source_lang=src_lang, target_lang=tgt_lang, label=label,
    )


TOPIC_EXEMPLARS = [
    _ex("e1", "The stock market rallied after the earnings report", "business"),
    _ex("e2", "The championship match went to extra time", "sports"),
    _ex("e3", "The new vaccine reduces infections in children", "health"),
    _ex("e4", "Parliament passed the new budget bill", "politics"),
    _ex("e5", "The festival features local musicians and dancers", "entertainment"),
    _ex("e6", "Engineers released a faster smartphone chip", "technology"),
    _ex("e7", "The congregation gathered for the annual feast", "religion"),
]

TOPIC_PARALLEL = [
    _pair("p1", "The market rose sharply today", "kasuwa ta haura sosai yau", "business"),
    _pair("p2", "The team won the final game", "kungiyar ta lashe wasan karshe", "sports"),
    _pair("p3", "Doctors opened a new clinic", "likitoci sun bude sabon asibiti", "health"),
    _pair("p4", "The senate debated the law", "majalisa ta tattauna sabuwar doka", "politics"),
    _pair("p5", "A famous singer held a concert", "shahararren mawaki ya yi kide kide"),
]

TOPIC_EVAL = [
    LabeledExample(id="q1", text="kasuwa ta tashi a yau", label="business", language=HAU),
    LabeledExample(id="q2", text="kungiyar kwallon kafa ta ci nasara a gasar", label="sports", language=HAU),
    LabeledExample(id="q3", text="likitoci sun fara aikin rigakafi a yankin", label="health", language=HAU),
    LabeledExample(id="q4", text="majalisa ta amince da kasafin kudi", label="politics", language=HAU),
    LabeledExample(id="q5", text="mawaka sun hallara a bikin gargajiya", label="entertainment", language=HAU),
    LabeledExample(id="q6", text="an kaddamar da sabuwar wayar salula", label="technology", language=HAU),
]


def topic_bundle() -> DatasetBundle:
    return DatasetBundle(
        task="topic",
        exemplar_store=list(TOPIC_EXEMPLARS),
        parallel_store=list(TOPIC_PARALLEL),
        eval_set=list(TOPIC_EVAL),
    )


NLI_EXEMPLARS = [
    LabeledExample(id="n1", premise="A man is eating food", hypothesis="A man is eating",
                   label="entailment", language=ENG),
    LabeledExample(id="n2", premise="A woman walks her dog", hypothesis="The woman is swimming",
                   label="contradiction", language=ENG),
    LabeledExample(id="n3", premise="Children play in the park", hypothesis="They might be siblings",
                   label="neutral", language=ENG),
    LabeledExample(id="n4", premise="The chef cooks dinner", hypothesis="Someone prepares a meal",
                   label="entailment", language=ENG),
]

NLI_PARALLEL = [
    ParallelPair(id="np1", source_text="The sky is blue", target_text="kech ki tso",
                 source_lang=ENG, target_lang=BZD),
    ParallelPair(id="np2", source_text="The river is long", target_text="di tso juerki",
                 source_lang=ENG, target_lang=BZD),
    ParallelPair(id="np3", source_text="Birds can fly", target_text="dutsi ulitane",
                 source_lang=ENG, target_lang=BZD),
]

NLI_EVAL = [
    LabeledExample(id="nq1", premise="ie' tso kapake", hypothesis="ie' kapake",
                   label="entailment", language=BZD),
    LabeledExample(id="nq2", premise="awa tso batsu", hypothesis="awa ki batsu wa",
                   label="contradiction", language=BZD),
]


def nli_bundle() -> DatasetBundle:
    return DatasetBundle(
        task="nli",
        exemplar_store=list(NLI_EXEMPLARS),
        parallel_store=list(NLI_PARALLEL),
        eval_set=list(NLI_EVAL),
    )


# Fixed inputs behind the checked-in golden prompt files.
GOLDEN_QUERY = TOPIC_EVAL[0]  # q1, business
GOLDEN_EXEMPLARS = TOPIC_EXEMPLARS[:3]  # e1 business, e2 sports, e3 health
GOLDEN_QUERY_PAIRS = TOPIC_PARALLEL[:2]  # p1, p2 (labeled, but used as query aligner)
GOLDEN_TABULAR_PAIRS = TOPIC_PARALLEL[:3]  # p1, p2, p3 (all labeled)


def golden_plan(fmt: str, label_config: str):
    from xicl.prompt import PromptPlan
    from xicl.retrieval import RetrievalStrategy

    alignment = "none" if fmt == "tabular" else "query"
    return PromptPlan(
        task="topic",
        source_lang=ENG,
        target_lang=HAU,
        shots=3,
        alignment=alignment,
        align_k=2,
        format=fmt,
        label_config=label_config,
        retrieval=RetrievalStrategy("mono"),
    )


def golden_prompt(fmt: str, label_config: str):
    from xicl.corpus import label_set
    from xicl.prompt import assemble_prompt

    plan = golden_plan(fmt, label_config)
    exemplars = [] if fmt == "tabular" else GOLDEN_EXEMPLARS
    pairs = GOLDEN_TABULAR_PAIRS if fmt == "tabular" else GOLDEN_QUERY_PAIRS
    return assemble_prompt(plan, exemplars, pairs, GOLDEN_QUERY, label_set("topic"))


def synthetic_texts(n: int, seed: int, vocab_size: int = 50, length: int = 8) -> list[str]:
    """Deterministic pseudo-random token-sequence corpus for oracle trials."""
    from xicl.retrieval import SplitMix64

    rng = SplitMix64(seed)
    vocab = [f"w{i}" for i in range(vocab_size)]
    texts = []
    for _ in range(n):
        k = 3 + rng.next_below(length)
        texts.append(" ".join(vocab[rng.next_below(vocab_size)] for _ in range(k)))
    return texts

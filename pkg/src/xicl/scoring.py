"""Label prediction by marginal prompt probability, against any /score endpoint.

A scorer returns one summed continuation logprob per candidate, conditioned on
the shared prompt prefix. Because the prefix term is constant across candidates,
ranking by conditional logprob equals ranking by full-sequence logprob for any
scorer satisfying chain-rule additivity. Ties break to the first candidate in
canonical label order.

Two in-process scorers ship for hermetic use: MockScorer (hash-based, the
spec's pseudo-logprob formula) and ChainScorer (a character-level double whose
token scores are dyadic rationals, so chain-rule additivity holds exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import ProtocolError, ValidationError
from .hashutil import stable_hash64
from .prompt import PromptText
from .similarity import http_post_json


@dataclass(frozen=True)
class CandidateScore:
    label: str
    continuation: str
    logprob: float

    def __post_init__(self):
        if not math.isfinite(self.logprob):
            raise ValidationError(f"candidate {self.label!r} has non-finite logprob")


@dataclass(frozen=True)
class Prediction:
    label: str
    scores: tuple[CandidateScore, ...]
    argmax_index: int

    def __post_init__(self):
        if self.scores[self.argmax_index].label != self.label:
            raise ValidationError("prediction label does not match the argmax candidate")


class Scorer(Protocol):
    def score(self, prompt: str, continuations: Sequence[str], mode: str = "sum") -> list[float]:
        ...


def mock_score(prompt: str, continuation: str, salt: str = "0") -> float:
    """Deterministic pseudo-logprob in [-10.00, -0.01], platform-independent."""
    h = stable_hash64(salt, prompt, continuation)
    return -(h % 1000) / 100.0 - 0.01


class MockScorer:
    """Hash-based scorer for hermetic tests; ignores mode (not token-based)."""

    def __init__(self, salt: str = "0"):
        self.salt = salt

    def score(self, prompt: str, continuations: Sequence[str], mode: str = "sum") -> list[float]:
        return [mock_score(prompt, c, self.salt) for c in continuations]


class ChainScorer:
    """Character-level scorer with exact chain-rule additivity.

    Each character's conditional logprob is a dyadic rational (a multiple of
    2^-10), so summing over any grouping of a sequence gives bit-identical
    results: full(prompt + c) == full(prompt) + conditional(c | prompt).
    """

    def __init__(self, salt: str = "0"):
        self.salt = salt

    def _char_logprob(self, context: str, ch: str) -> float:
        h = stable_hash64(self.salt, context, ch)
        return -(h % 1024) / 1024.0 - 1.0 / 1024.0

    def conditional(self, prompt: str, continuation: str) -> float:
        total = 0.0
        for i, ch in enumerate(continuation):
            total += self._char_logprob(prompt + continuation[:i], ch)
        return total

    def full_sequence(self, text: str) -> float:
        return self.conditional("", text)

    def score(self, prompt: str, continuations: Sequence[str], mode: str = "sum") -> list[float]:
        out = []
        for cont in continuations:
            s = self.conditional(prompt, cont)
            if mode == "mean":
                s = s / len(cont) if cont else 0.0
            out.append(s)
        return out


class HttpScorer:
    """Client for the /score wire protocol.

    Request: {"prompt": str, "continuations": [str], "mode": "sum"|"mean"}
    Response: {"logprobs": [float]}, order-aligned with the request.
    """

    def __init__(self, url: str, transport=None, timeout: float = 60.0):
        self.url = url
        self._transport = transport or (lambda payload: http_post_json(self.url, payload, timeout))

    def score(self, prompt: str, continuations: Sequence[str], mode: str = "sum") -> list[float]:
        resp = self._transport({"prompt": prompt, "continuations": list(continuations), "mode": mode})
        logprobs = resp.get("logprobs")
        if not isinstance(logprobs, list) or len(logprobs) != len(continuations):
            got = "missing" if logprobs is None else str(len(logprobs))
            raise ProtocolError(f"/score returned {got} logprobs for {len(continuations)} continuations")
        return [float(v) for v in logprobs]


def score_candidates(
    prompt: str,
    candidates: Sequence[tuple[str, str]],
    scorer: Scorer,
    mode: str = "sum",
) -> list[CandidateScore]:
    """Score all candidates in one request; response stays order-aligned."""
    if not candidates:
        raise ValidationError("at least one candidate is required")
    logprobs = scorer.score(prompt, [cont for _, cont in candidates], mode)
    return [
        CandidateScore(label=label, continuation=cont, logprob=lp)
        for (label, cont), lp in zip(candidates, logprobs)
    ]


def argmax_first(values: Sequence[float]) -> int:
    """Index of the first maximal value (deterministic tie-break)."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def predict(prompt_text: PromptText, scorer: Scorer, mode: str = "sum") -> Prediction:
    """Argmax over candidate logprobs, first-maximal tie-break in canonical order."""
    scores = score_candidates(prompt_text.prompt, prompt_text.candidates, scorer, mode)
    idx = argmax_first([s.logprob for s in scores])
    return Prediction(label=scores[idx].label, scores=tuple(scores), argmax_index=idx)

"""Model providers behind the sidecar endpoints.

Built-in providers are deterministic and self-contained so the sidecar works
offline: a hash-projection sentence embedder, a byte-level recurrent causal LM
with seeded weights (exact teacher-forced conditional logprobs, so summed
scores are additive over continuation splits), and identity / word-map
translators. Hugging Face-backed providers can be configured by model
identifier when the corresponding libraries and weights are available locally;
they load lazily and report readiness through the registry.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
import threading
from typing import Sequence

import numpy as np

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def _hash_stream(*parts: str, n_floats: int) -> np.ndarray:
    """Deterministic uniform floats in [-1, 1) derived from a blake2b stream."""
    out = np.empty(n_floats, dtype=np.float64)
    filled = 0
    block = 0
    while filled < n_floats:
        h = hashlib.blake2b(digest_size=64)
        for part in parts:
            data = part.encode("utf-8")
            h.update(len(data).to_bytes(8, "big"))
            h.update(data)
        h.update(block.to_bytes(8, "big"))
        words = struct.unpack("<8Q", h.digest())
        take = min(8, n_floats - filled)
        for i in range(take):
            out[filled + i] = (words[i] / 2**63) - 1.0
        filled += take
        block += 1
    return out


class HashEmbeddingProvider:
    """Bag-of-hashed-tokens sentence embeddings; identical text, identical vector."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.provider_id = f"hash-embed:{dim}:{seed}"
        self._token_vectors: dict[str, np.ndarray] = {}

    def ready(self) -> bool:
        return True

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            vec = _hash_stream("tok", str(self.seed), token, n_floats=self.dim)
            self._token_vectors[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        out = []
        for text in texts:
            acc = np.zeros(self.dim, dtype=np.float64)
            for token in _WORD_RE.findall(text.lower()):
                acc += self._token_vector(token)
            norm = math.sqrt(float(acc @ acc))
            if norm > 0:
                acc /= norm
            out.append([float(x) for x in acc.astype(np.float32)])
        return out


_BOS = 256  # input-only token preceding every sequence


class RnnCausalLmProvider:
    """Byte-level Elman-RNN causal LM with reproducible seeded weights.

    score() returns the exact teacher-forced sum (or mean) of continuation-byte
    conditional logprobs given the prompt. One prompt state is computed per
    request and shared across continuations.
    """

    def __init__(self, seed: int = 0, hidden: int = 32):
        self.hidden = hidden
        self.seed = seed
        self.provider_id = f"rnn-lm:{hidden}:{seed}"
        d = hidden
        self._emb = _hash_stream("emb", str(seed), n_floats=257 * d).reshape(257, d)
        self._rec = _hash_stream("rec", str(seed), n_floats=d * d).reshape(d, d) * (1.1 / math.sqrt(d))
        self._out = _hash_stream("out", str(seed), n_floats=256 * d).reshape(256, d)

    def ready(self) -> bool:
        return True

    def _step(self, h: np.ndarray, token: int) -> np.ndarray:
        return np.tanh(self._emb[token] + self._rec @ h)

    def _log_softmax(self, h: np.ndarray) -> np.ndarray:
        logits = self._out @ h
        m = logits.max()
        return logits - (m + math.log(float(np.exp(logits - m).sum())))

    def _prompt_state(self, prompt: str) -> np.ndarray:
        h = self._step(np.zeros(self.hidden), _BOS)
        for b in prompt.encode("utf-8"):
            h = self._step(h, b)
        return h

    def _continuation_logprob(self, state: np.ndarray, continuation: str, mode: str) -> float:
        data = continuation.encode("utf-8")
        h = state
        total = 0.0
        for b in data:
            total += float(self._log_softmax(h)[b])
            h = self._step(h, b)
        if mode == "mean":
            return total / len(data) if data else 0.0
        return total

    def score(self, prompt: str, continuations: Sequence[str], mode: str = "sum") -> list[float]:
        state = self._prompt_state(prompt)
        return [self._continuation_logprob(state, c, mode) for c in continuations]


class IdentityTranslateProvider:
    provider_id = "identity-mt"

    def ready(self) -> bool:
        return True

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        return list(texts)


class WordMapTranslateProvider:
    """Word-for-word translation from a configured lexicon; unknown words pass through."""

    def __init__(self, lexicon: dict[str, dict[str, str]]):
        # lexicon: "src:tgt" -> {word: word}
        self.lexicon = lexicon
        self.provider_id = "wordmap-mt"

    def ready(self) -> bool:
        return True

    def translate(self, texts: Sequence[str], src: str, tgt: str) -> list[str]:
        table = self.lexicon.get(f"{src}:{tgt}", {})
        out = []
        for text in texts:
            words = text.split(" ")
            out.append(" ".join(table.get(w, w) for w in words))
        return out


class _LazyHfProvider:
    """Base for providers that load a local Hugging Face model in the background."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.provider_id = f"hf:{model_id}"
        self._model = None
        self._error: str | None = None
        self._thread = threading.Thread(target=self._load_guarded, daemon=True)
        self._thread.start()

    def _load_guarded(self) -> None:
        try:
            self._model = self._load()
        except Exception as exc:  # surface through /healthz, not a crash
            self._error = f"{type(exc).__name__}: {exc}"

    def _load(self):
        raise NotImplementedError

    def ready(self) -> bool:
        return self._model is not None

    @property
    def error(self) -> str | None:
        return self._error


class HfEmbeddingProvider(_LazyHfProvider):
    def __init__(self, model_id: str, dim: int):
        self.dim = dim
        super().__init__(model_id)

    def _load(self):
        from sentence_transformers import SentenceTransformer

        return SentenceTransformer(self.model_id)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        vectors = self._model.encode(list(texts), convert_to_numpy=True)
        return [[float(x) for x in v] for v in vectors]


class HfCausalLmProvider(_LazyHfProvider):
    def _load(self):
        import torch  # noqa: F401
        from transformers import AutoModelForCausalLM, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(self.model_id)
        model = AutoModelForCausalLM.from_pretrained(self.model_id)
        model.eval()
        return (tokenizer, model)

    def score(self, prompt: str, continuations: Sequence[str], mode: str = "sum") -> list[float]:
        import torch

        tokenizer, model = self._model
        out = []
        prompt_ids = tokenizer(prompt, return_tensors="pt").input_ids
        for continuation in continuations:
            cont_ids = tokenizer(continuation, add_special_tokens=False, return_tensors="pt").input_ids
            if cont_ids.numel() == 0:
                out.append(0.0)
                continue
            input_ids = torch.cat([prompt_ids, cont_ids], dim=1)
            with torch.no_grad():
                logits = model(input_ids).logits[0]
            logprobs = torch.log_softmax(logits, dim=-1)
            start = prompt_ids.shape[1]
            total = 0.0
            for pos in range(start, input_ids.shape[1]):
                total += float(logprobs[pos - 1, input_ids[0, pos]])
            out.append(total / cont_ids.shape[1] if mode == "mean" else total)
        return out

"""Provider registry: YAML config -> loaded provider handles."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .providers import (
    HashEmbeddingProvider,
    HfCausalLmProvider,
    HfEmbeddingProvider,
    IdentityTranslateProvider,
    RnnCausalLmProvider,
    WordMapTranslateProvider,
)

DEFAULT_CONFIG: dict = {
    "server": {"max_batch": 64},
    "providers": {
        "embedding": {"default": {"type": "hash", "dim": 64, "seed": 0}},
        "scoring": {"default": {"type": "rnn-lm", "hidden": 32, "seed": 0}},
        "translation": {"default": {"type": "identity"}},
    },
}


def _build_embedding(spec: dict):
    kind = spec.get("type", "hash")
    if kind == "hash":
        return HashEmbeddingProvider(dim=int(spec.get("dim", 64)), seed=int(spec.get("seed", 0)))
    if kind == "hf":
        return HfEmbeddingProvider(model_id=spec["model"], dim=int(spec["dim"]))
    raise ValueError(f"unknown embedding provider type {kind!r}")


def _build_scoring(spec: dict):
    kind = spec.get("type", "rnn-lm")
    if kind == "rnn-lm":
        return RnnCausalLmProvider(seed=int(spec.get("seed", 0)), hidden=int(spec.get("hidden", 32)))
    if kind == "hf":
        return HfCausalLmProvider(model_id=spec["model"])
    raise ValueError(f"unknown scoring provider type {kind!r}")


def _build_translation(spec: dict):
    kind = spec.get("type", "identity")
    if kind == "identity":
        return IdentityTranslateProvider()
    if kind == "wordmap":
        return WordMapTranslateProvider(lexicon=spec.get("lexicon", {}))
    raise ValueError(f"unknown translation provider type {kind!r}")


@dataclass
class ProviderRegistry:
    embedders: dict = field(default_factory=dict)
    scorers: dict = field(default_factory=dict)
    translators: dict = field(default_factory=dict)
    max_batch: int = 64

    def embedder(self, name: str):
        return self.embedders.get(name)

    def default_scorer(self):
        return self.scorers.get("default") or next(iter(self.scorers.values()), None)

    def default_translator(self):
        return self.translators.get("default") or next(iter(self.translators.values()), None)

    def readiness(self) -> dict:
        def describe(provider):
            info = {"ready": provider.ready(), "provider_id": provider.provider_id}
            if hasattr(provider, "dim"):
                info["dim"] = provider.dim
            error = getattr(provider, "error", None)
            if error:
                info["error"] = error
            return info

        return {
            "embedding": {name: describe(p) for name, p in self.embedders.items()},
            "scoring": {name: describe(p) for name, p in self.scorers.items()},
            "translation": {name: describe(p) for name, p in self.translators.items()},
        }

    def all_ready(self) -> bool:
        providers = (
            list(self.embedders.values()) + list(self.scorers.values()) + list(self.translators.values())
        )
        return all(p.ready() for p in providers)


def build_registry(config: dict | None = None) -> ProviderRegistry:
    config = config or DEFAULT_CONFIG
    providers = config.get("providers", DEFAULT_CONFIG["providers"])
    registry = ProviderRegistry(
        max_batch=int(config.get("server", {}).get("max_batch", 64)),
    )
    for name, spec in providers.get("embedding", {}).items():
        registry.embedders[name] = _build_embedding(spec)
    for name, spec in providers.get("scoring", {}).items():
        registry.scorers[name] = _build_scoring(spec)
    for name, spec in providers.get("translation", {}).items():
        registry.translators[name] = _build_translation(spec)
    return registry


def load_config(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return yaml.safe_load(fh) or {}

"""FastAPI application exposing /embed, /score, /translate, /healthz.

Responses are order-aligned with request arrays. Schema violations return
HTTP 400 with {"error": str}; a provider that is still loading returns 503.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .registry import ProviderRegistry, build_registry


class EmbedRequest(BaseModel):
    provider_id: str
    texts: list[str]


class ScoreRequest(BaseModel):
    prompt: str
    continuations: list[str]
    mode: Literal["sum", "mean"] = "sum"


class TranslateRequest(BaseModel):
    src: str
    tgt: str
    texts: list[str]


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(registry: ProviderRegistry | None = None) -> FastAPI:
    registry = registry or build_registry()
    app = FastAPI(title="modelserve", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, f"schema violation: {exc.errors()[:3]}")

    @app.post("/embed")
    def embed(req: EmbedRequest):
        provider = registry.embedder(req.provider_id)
        if provider is None:
            return _error(400, f"unknown embedding provider {req.provider_id!r}")
        if not provider.ready():
            return _error(503, f"provider {req.provider_id!r} is still loading")
        vectors: list[list[float]] = []
        for start in range(0, len(req.texts), registry.max_batch):
            vectors.extend(provider.embed(req.texts[start : start + registry.max_batch]))
        return {"dim": provider.dim, "vectors": vectors}

    @app.post("/score")
    def score(req: ScoreRequest):
        provider = registry.default_scorer()
        if provider is None:
            return _error(400, "no scoring provider configured")
        if not provider.ready():
            return _error(503, "scoring provider is still loading")
        return {"logprobs": provider.score(req.prompt, req.continuations, req.mode)}

    @app.post("/translate")
    def translate(req: TranslateRequest):
        provider = registry.default_translator()
        if provider is None:
            return _error(400, "no translation provider configured")
        if not provider.ready():
            return _error(503, "translation provider is still loading")
        translations: list[str] = []
        for start in range(0, len(req.texts), registry.max_batch):
            translations.extend(
                provider.translate(req.texts[start : start + registry.max_batch], req.src, req.tgt)
            )
        return {"translations": translations}

    @app.get("/healthz")
    def healthz():
        return {"ok": registry.all_ready(), "providers": registry.readiness()}

    return app


def serve(config: dict | None = None, host: str = "127.0.0.1", port: int = 8080) -> None:
    import uvicorn

    uvicorn.run(create_app(build_registry(config)), host=host, port=port)

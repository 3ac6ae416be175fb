"""REST provider for completions/embeddings endpoints in the common OpenAI-style layout."""

from __future__ import annotations

import os
from typing import Sequence

import httpx

from ..errors import ProviderError
from .client import TransientProviderError

API_KEY_ENV = "SUMBOOST_API_KEY"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class HttpProvider:
    """POSTs ``{base_url}/completions`` and ``{base_url}/embeddings``.

    Timeouts, connection errors, 429 and 5xx are reported as transient so the
    client retries them; other 4xx responses fail immediately.
    """

    def __init__(self, model: str, base_url: str = DEFAULT_BASE_URL, *,
                 embedding_model: str = "text-embedding-ada-002",
                 api_key: str | None = None, timeout: float = 60.0,
                 transport: httpx.BaseTransport | None = None):
        self.model = model
        self.embedding_model = embedding_model
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._http = httpx.Client(base_url=base_url.rstrip("/"), headers=headers,
                                  timeout=timeout, transport=transport)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._http.post(path, json=payload)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise TransientProviderError(f"{path}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientProviderError(f"{path}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"{path}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderError(f"{path}: response is not JSON") from exc

    def complete(self, prompt: str, temperature: float, max_tokens: int, attempt: int) -> str:
        # attempt only distinguishes cache entries; sampling variety comes from temperature
        body = self._post("/completions", {
            "model": self.model,
            "prompt": prompt,
            "temperature": temperature,
            "max_tokens": max_tokens,
        })
        try:
            return body["choices"][0]["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion response: {body!r:.200}") from exc

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = self._post("/embeddings", {"model": self.embedding_model, "input": list(texts)})
        try:
            data = sorted(body["data"], key=lambda d: d.get("index", 0))
            return [d["embedding"] for d in data]
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"malformed embedding response: {body!r:.200}") from exc

    def close(self):
        self._http.close()

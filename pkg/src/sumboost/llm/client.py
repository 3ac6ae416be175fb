"""Cached, retrying front end over a completion/embedding provider."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from ..errors import CacheCorruption, ContextOverflow, ProviderError

log = logging.getLogger(__name__)

CHARS_PER_TOKEN = 4
CONTEXT_LIMIT = 2048
EMBED_CONTEXT_LIMIT = 8191
EMBED_DIM = 1536
SUMMARY_TEMPERATURE = 0.80
INFERENCE_TEMPERATURE = 0.0

_PIECE = re.compile(r"\w+|[^\w\s]")


def count_tokens(text: str) -> int:
    """Approximate token count.

    The larger of the number of word/punctuation pieces and
    ``len(text) // CHARS_PER_TOKEN``. Not provider-exact; typical English runs
    near four characters per token, and short texts are dominated by the piece
    count.
    """
    if not text:
        return 0
    return max(len(_PIECE.findall(text)), len(text) // CHARS_PER_TOKEN)


class Provider(Protocol):
    model: str

    def complete(self, prompt: str, temperature: float, max_tokens: int, attempt: int) -> str: ...

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


class TransientProviderError(ProviderError):
    """Raised by providers for failures worth retrying (timeouts, 429, 5xx)."""


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int
    completion_tokens: int
    cached: bool = False


def cache_key(*parts) -> str:
    blob = json.dumps(parts, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSONL store keyed by hex digest.

    A torn final line (crash mid-write) is dropped on load; a bad line anywhere
    else raises ``CacheCorruption``. ``path=None`` keeps everything in memory.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = None if path is None else os.fspath(path)
        self._data: dict[str, object] = {}
        self._lock = threading.Lock()
        if self.path and os.path.exists(self.path):
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                self._data[rec["key"]] = rec["value"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                if i == len(lines) - 1:
                    log.warning("dropping torn trailing line in %s", self.path)
                    keep = len("\n".join(lines[:-1]).encode("utf-8")) + (1 if i else 0)
                    with open(self.path, "r+b") as fh:
                        fh.truncate(keep)
                    return
                raise CacheCorruption(f"{self.path}:{i + 1}: {exc}") from exc
        if lines and lines[-1].strip():
            # next append must start on a fresh line
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write("\n")

    def __len__(self):
        return len(self._data)

    def __contains__(self, key):
        return key in self._data

    def get(self, key, default=None):
        return self._data.get(key, default)

    def put(self, key: str, value, kind: str = "completion"):
        with self._lock:
            if key in self._data:
                return
            self._data[key] = value
            if self.path:
                rec = json.dumps({"key": key, "kind": kind, "value": value}, ensure_ascii=False)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(rec + "\n")


class LLMClient:
    """What the rest of the library calls "the backend".

    Every completion is looked up in the cache first (key: model, prompt,
    temperature, max_tokens, attempt). On a miss the provider is called with
    up to ``max_attempts`` tries and exponential backoff; the answer is
    persisted before it is returned. With ``offline=True`` a miss is an error,
    which is how cached runs are replayed without network.
    """

    def __init__(
        self,
        provider: Provider,
        cache: ResponseCache | None = None,
        *,
        context_limit: int = CONTEXT_LIMIT,
        embed_context_limit: int = EMBED_CONTEXT_LIMIT,
        max_attempts: int = 5,
        backoff: float = 1.0,
        parallelism: int = 4,
        offline: bool = False,
        sleep=time.sleep,
    ):
        self.provider = provider
        self.cache = cache if cache is not None else ResponseCache()
        self.context_limit = context_limit
        self.embed_context_limit = embed_context_limit
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.parallelism = max(1, parallelism)
        self.offline = offline
        self._sleep = sleep
        self._stats_lock = threading.Lock()
        self.network_calls = 0
        self.cache_hits = 0

    @property
    def model(self) -> str:
        return self.provider.model

    def _call(self, fn, *args):
        if self.offline:
            raise ProviderError("cache miss while offline")
        last = None
        for i in range(self.max_attempts):
            with self._stats_lock:
                self.network_calls += 1
            try:
                return fn(*args)
            except TransientProviderError as exc:
                last = exc
                if i + 1 < self.max_attempts:
                    delay = self.backoff * 2 ** i
                    log.info("provider error (%s); retry %d in %.1fs", exc, i + 1, delay)
                    self._sleep(delay)
        raise ProviderError(f"gave up after {self.max_attempts} attempts: {last}") from last

    def complete(self, prompt: str, *, temperature: float = INFERENCE_TEMPERATURE,
                 max_tokens: int = 16, attempt: int = 0) -> Completion:
        if not prompt:
            raise ValueError("empty prompt")
        if not 0 <= temperature <= 2:
            raise ValueError(f"temperature {temperature} outside [0, 2]")
        prompt_tokens = count_tokens(prompt)
        if prompt_tokens + max_tokens > self.context_limit:
            raise ContextOverflow(
                f"prompt (~{prompt_tokens} tokens) + {max_tokens} completion tokens "
                f"exceeds context limit {self.context_limit}")
        key = cache_key("complete", self.model, prompt, temperature, max_tokens, attempt)
        hit = self.cache.get(key)
        if hit is not None:
            with self._stats_lock:
                self.cache_hits += 1
            return Completion(hit, prompt_tokens, count_tokens(hit), cached=True)
        text = self._call(self.provider.complete, prompt, temperature, max_tokens, attempt)
        if not isinstance(text, str):
            raise ProviderError(f"provider returned {type(text).__name__}, expected str")
        self.cache.put(key, text)
        return Completion(text, prompt_tokens, count_tokens(text))

    def complete_many(self, prompts: Sequence[str], **kw) -> list[Completion]:
        """Order-preserving fan-out of ``complete`` over a thread pool."""
        if self.parallelism == 1 or len(prompts) < 2:
            return [self.complete(p, **kw) for p in prompts]
        with ThreadPoolExecutor(self.parallelism) as pool:
            return list(pool.map(lambda p: self.complete(p, **kw), prompts))

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """One row per text; identical texts always get identical vectors."""
        texts = list(texts)
        if not texts:
            return np.zeros((0, 0))
        for t in texts:
            if count_tokens(t) > self.embed_context_limit:
                raise ContextOverflow(f"text of ~{count_tokens(t)} tokens exceeds embedding limit")
        keys = [cache_key("embed", self.model, t) for t in texts]
        missing = sorted({t for t, k in zip(texts, keys) if k not in self.cache})
        if missing:
            vectors = self._call(self.provider.embed, missing)
            if len(vectors) != len(missing):
                raise ProviderError(f"asked for {len(missing)} embeddings, got {len(vectors)}")
            for t, v in zip(missing, vectors):
                self.cache.put(cache_key("embed", self.model, t), [float(x) for x in v], kind="embedding")
        else:
            with self._stats_lock:
                self.cache_hits += len(texts)
        out = np.array([self.cache.get(k) for k in keys], dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise ProviderError("non-finite embedding values")
        return out

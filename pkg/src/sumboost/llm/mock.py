"""Offline stand-in for the LLM provider.

Two modes:

``scripted``
    An ordered list of ``{pattern, responses}``; the first regex that matches
    the prompt answers with ``responses[attempt % len(responses)]``.

``noisy_rule``
    Plays every role in the pipeline. Conversion prompts get a plain sentence
    listing the attributes; summarization prompts get an opaque hypothesis
    tag; classification prompts get the class chosen by a labeling rule over
    the query text, flipped to another class with probability ``flip``.

Everything is a pure function of ``(prompt, attempt, seed)``.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..errors import DataError, NoPatternMatch
from ..prompts import (
    CONVERT_MARKER,
    EXAMPLES_HEADER,
    QUERY_HEADER,
    extract_query,
    parse_conversion_attributes,
)
from .client import EMBED_DIM

SCRIPTED = "scripted"
NOISY_RULE = "noisy_rule"


def _digest(*parts) -> bytes:
    return hashlib.sha256(json.dumps(parts, ensure_ascii=False).encode("utf-8")).digest()


def hash_embedding(text: str, dim: int = EMBED_DIM, salt: str = "") -> list[float]:
    """Deterministic unit vector seeded by the text."""
    seed = int.from_bytes(_digest("embed", salt, text)[:8], "little")
    v = np.random.default_rng(seed).standard_normal(dim)
    return (v / np.linalg.norm(v)).tolist()


@dataclass
class OracleSpec:
    mode: str
    script: list[dict] = field(default_factory=list)
    classes: tuple[str, ...] = ()
    rules: list[dict] = field(default_factory=list)
    default: str | None = None
    flip: float = 0.0
    seed: int = 0
    embedding_dim: int = EMBED_DIM

    def __post_init__(self):
        if self.mode not in (SCRIPTED, NOISY_RULE):
            raise DataError(f"unknown oracle mode {self.mode!r}")
        if self.mode == NOISY_RULE:
            if not 0 <= self.flip < 0.5:
                raise DataError(f"flip probability must be in [0, 0.5), got {self.flip}")
            if len(self.classes) < 2:
                raise DataError("noisy_rule oracle needs the class list")
            for r in self.rules:
                if r["label"] not in self.classes:
                    raise DataError(f"rule label {r['label']!r} not a class")
        self._compiled = [(re.compile(s["pattern"], re.S), list(s["responses"])) for s in self.script]
        self._rules = [(re.compile(r["match"], re.I), r["label"]) for r in self.rules]

    @classmethod
    def from_dict(cls, d: dict) -> "OracleSpec":
        d = dict(d)
        d["classes"] = tuple(d.get("classes", ()))
        return cls(**d)

    @classmethod
    def load(cls, path) -> "OracleSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "script": self.script,
            "classes": list(self.classes),
            "rules": self.rules,
            "default": self.default,
            "flip": self.flip,
            "seed": self.seed,
            "embedding_dim": self.embedding_dim,
        }

    # -- noisy_rule ----------------------------------------------------------

    def rule_label(self, query: str) -> str:
        for pattern, label in self._rules:
            if pattern.search(query):
                return label
        if self.default is not None:
            return self.default
        # no rule and no default: an arbitrary but fixed labeling of the query
        k = int.from_bytes(_digest("label", self.seed, query)[:4], "little") % len(self.classes)
        return self.classes[k]

    def classify(self, prompt: str, attempt: int) -> str:
        label = self.rule_label(extract_query(prompt))
        rng = random.Random(_digest("flip", self.seed, prompt, attempt))
        if rng.random() < self.flip:
            others = [c for c in self.classes if c != label]
            label = others[rng.randrange(len(others))]
        return label

    def respond(self, prompt: str, attempt: int = 0) -> str:
        if self.mode == SCRIPTED:
            for pattern, responses in self._compiled:
                if pattern.search(prompt):
                    return responses[attempt % len(responses)]
            raise NoPatternMatch(f"no scripted pattern matches prompt starting {prompt[:60]!r}")
        if QUERY_HEADER in prompt:
            return self.classify(prompt, attempt)
        if CONVERT_MARKER in prompt:
            return describe_attributes(parse_conversion_attributes(prompt))
        if EXAMPLES_HEADER in prompt:
            tag = _digest("summary", self.seed, prompt, attempt).hex()[:12]
            return f"Hypothesis {tag}: the attribute levels listed in the examples separate the classes."
        raise NoPatternMatch("prompt is not a conversion, summary or classification prompt")


_FILLER = ("Nothing else is recorded about this entry beyond the values listed here, "
           "and each of them is reported exactly as observed.").split()


def describe_attributes(attrs: dict[str, str]) -> str:
    """Flat ``name is value`` sentence padded to at least 20 words."""
    body = "; ".join(f"{k} is {v}" for k, v in attrs.items())
    words = f"This record shows that {body}.".split()
    i = 0
    while len(words) < 20:
        words.append(_FILLER[i % len(_FILLER)])
        i += 1
    return " ".join(words)


class MockProvider:
    """Provider backed by an ``OracleSpec`` or any ``(prompt, attempt) -> str`` callable."""

    def __init__(self, oracle: OracleSpec | Callable[[str, int], str], *, model: str = "mock",
                 embedding_dim: int | None = None,
                 embedder: Callable[[str], Sequence[float]] | None = None):
        self.oracle = oracle
        self.model = model
        if embedding_dim is None:
            embedding_dim = getattr(oracle, "embedding_dim", EMBED_DIM)
        self.embedding_dim = embedding_dim
        self.embedder = embedder
        self.calls = 0

    def complete(self, prompt: str, temperature: float, max_tokens: int, attempt: int) -> str:
        self.calls += 1
        if isinstance(self.oracle, OracleSpec):
            return self.oracle.respond(prompt, attempt)
        return self.oracle(prompt, attempt)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        if self.embedder is not None:
            return [list(self.embedder(t)) for t in texts]
        return [hash_embedding(t, self.embedding_dim) for t in texts]

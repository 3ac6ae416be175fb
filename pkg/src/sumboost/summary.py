"""Summary weak learner: summarize labeled descriptions, classify with the summary as context."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AllCandidatesFailed,
    ContextOverflow,
    EmptySummary,
    MappingFailure,
)
from .llm.client import INFERENCE_TEMPERATURE, SUMMARY_TEMPERATURE, count_tokens
from .prompts import PromptConfig, inference_prompt, summary_prompt
from .textualize import DataDescription

log = logging.getLogger(__name__)

SHUFFLED = "shuffled"
GROUPED = "grouped"
N_CANDIDATES = 25
SUMMARY_MAX_TOKENS = 256
INFERENCE_MAX_TOKENS = 16
ABSTAIN = -1


def map_answer(completion: str, classes: Sequence[str]) -> str:
    """Find the single class named in ``completion``.

    Case-insensitive substring search, longest class name first; each match is
    blanked out before shorter names are tried, so ``non-relapse`` does not
    also count as ``relapse``. Zero or several distinct hits raise
    ``MappingFailure``.
    """
    if not classes:
        raise ValueError("empty class list")
    text = completion.lower()
    hits = []
    for cls in sorted(classes, key=lambda c: (-len(c), list(classes).index(c))):
        needle = cls.lower()
        if needle and needle in text:
            hits.append(cls)
            text = text.replace(needle, "\0" * len(needle))
    if len(hits) != 1:
        raise MappingFailure(completion, hits)
    return hits[0]


@dataclass(frozen=True)
class SummaryHypothesis:
    summary_text: str
    inference_prefix: str
    classes: tuple[str, ...]
    summary_directive: str = "Tl;dr"
    example_order: str = SHUFFLED
    source_sample: tuple[int, ...] = ()
    attempt: int = 0

    def to_dict(self) -> dict:
        return {
            "summary_text": self.summary_text,
            "inference_prefix": self.inference_prefix,
            "classes": list(self.classes),
            "summary_directive": self.summary_directive,
            "example_order": self.example_order,
            "source_sample": list(self.source_sample),
            "attempt": self.attempt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryHypothesis":
        return cls(
            summary_text=d["summary_text"],
            inference_prefix=d["inference_prefix"],
            classes=tuple(d["classes"]),
            summary_directive=d.get("summary_directive", "Tl;dr"),
            example_order=d.get("example_order", SHUFFLED),
            source_sample=tuple(d.get("source_sample", ())),
            attempt=int(d.get("attempt", 0)),
        )


@dataclass(frozen=True)
class CandidateScore:
    validation_error: float
    training_error: float | None = None
    attempt: int = 0


@dataclass
class LearnerConfig:
    candidates: int = N_CANDIDATES
    order: str = SHUFFLED
    support_size: int | None = None  # None: as many as the context allows
    summary_max_tokens: int = SUMMARY_MAX_TOKENS
    inference_max_tokens: int = INFERENCE_MAX_TOKENS
    cluster_threshold: float = 0.05
    seed: int = 0


def order_examples(samples: Sequence[DataDescription], order: str, classes: Sequence[str],
                   seed) -> list[DataDescription]:
    samples = list(samples)
    if order == GROUPED:
        rank = {c: k for k, c in enumerate(classes)}
        return sorted(samples, key=lambda d: rank.get(d.label, len(rank)))
    if order != SHUFFLED:
        raise ValueError(f"unknown example order {order!r}")
    perm = np.random.default_rng(seed).permutation(len(samples))
    return [samples[i] for i in perm]


def fit_blocks(head_prompt, blocks: list[str], budget: int) -> list[str]:
    """Drop whole trailing blocks until ``head_prompt(blocks)`` fits in ``budget`` tokens."""
    blocks = list(blocks)
    while blocks and count_tokens(head_prompt(blocks)) > budget:
        blocks.pop()
    if count_tokens(head_prompt(blocks)) > budget:
        raise ContextOverflow("prompt does not fit even without examples")
    return blocks


def support_size(descriptions: Sequence[DataDescription], config: PromptConfig, context_limit: int,
                 max_tokens: int = SUMMARY_MAX_TOKENS) -> int:
    """How many average-length labeled descriptions fit in one summarization prompt."""
    if not descriptions:
        return 0
    overhead = count_tokens(summary_prompt(config.metadata, [], config.summary_directive))
    per_block = np.mean([count_tokens(d.text) + 1 for d in descriptions])
    budget = context_limit - max_tokens - overhead
    return int(max(1, min(len(descriptions), budget // per_block)))


def summarize(samples: Sequence[DataDescription], config: PromptConfig, backend, attempt: int = 0, *,
              order: str = SHUFFLED, max_tokens: int = SUMMARY_MAX_TOKENS, seed: int = 0) -> SummaryHypothesis:
    """One summary of ``samples`` at the summary temperature.

    Examples are listed shuffled (seeded by ``seed`` and ``attempt``) or grouped
    by class, and trailing examples that do not fit the context are dropped.
    """
    ordered = order_examples(samples, order, config.classes, (seed, attempt))
    blocks = fit_blocks(
        lambda b: summary_prompt(config.metadata, b, config.summary_directive),
        [d.text for d in ordered],
        backend.context_limit - max_tokens,
    )
    kept = ordered[:len(blocks)]
    prompt = summary_prompt(config.metadata, blocks, config.summary_directive)
    text = backend.complete(prompt, temperature=SUMMARY_TEMPERATURE, max_tokens=max_tokens,
                            attempt=attempt).text.strip()
    if not text:
        raise EmptySummary(f"attempt {attempt} produced an empty summary")
    return SummaryHypothesis(
        summary_text=text,
        inference_prefix=config.inference_directive,
        classes=tuple(config.classes),
        summary_directive=config.summary_directive,
        example_order=order,
        source_sample=tuple(d.row_index for d in kept),
        attempt=attempt,
    )


def _query_text(query) -> str:
    return query.feature_text if isinstance(query, DataDescription) else str(query)


def infer(h: SummaryHypothesis, query, backend, attempt: int = 0,
          max_tokens: int = INFERENCE_MAX_TOKENS) -> str:
    prompt = inference_prompt(h.summary_text, _query_text(query), h.inference_prefix)
    text = backend.complete(prompt, temperature=INFERENCE_TEMPERATURE, max_tokens=max_tokens,
                            attempt=attempt).text
    return map_answer(text, h.classes)


def predict_indices(h: SummaryHypothesis, queries: Sequence, backend,
                    max_tokens: int = INFERENCE_MAX_TOKENS) -> np.ndarray:
    """Class index per query; ``ABSTAIN`` where the answer stays unmappable after one retry."""
    index = {c: k for k, c in enumerate(h.classes)}
    prompts = [inference_prompt(h.summary_text, _query_text(q), h.inference_prefix) for q in queries]
    first = backend.complete_many(prompts, temperature=INFERENCE_TEMPERATURE, max_tokens=max_tokens, attempt=0)
    out = np.full(len(prompts), ABSTAIN, dtype=np.int64)
    for t, (prompt, comp) in enumerate(zip(prompts, first)):
        for attempt, text in ((0, comp.text), (1, None)):
            if text is None:
                text = backend.complete(prompt, temperature=INFERENCE_TEMPERATURE,
                                        max_tokens=max_tokens, attempt=attempt).text
            try:
                out[t] = index[map_answer(text, h.classes)]
                break
            except MappingFailure:
                continue
    return out


def error_rate(pred: np.ndarray, labels: np.ndarray) -> float:
    """Unweighted error; abstentions count as mistakes."""
    if len(labels) == 0:
        return 0.0
    return float(np.mean(np.asarray(pred) != np.asarray(labels)))


@dataclass
class _Candidate:
    hypothesis: SummaryHypothesis
    val_pred: np.ndarray
    val_error: float
    train_error: float | None = None


def fit_summary(train: Sequence[DataDescription], val: Sequence[DataDescription], config: PromptConfig,
                backend, sampler, learner: LearnerConfig | None = None,
                attempt_offset: int = 0) -> tuple[SummaryHypothesis, CandidateScore]:
    """Best of ``learner.candidates`` summaries by validation error.

    Support sets come from uniform-weight cluster sampling. Ties on validation
    error go to the higher training error (smaller generalization gap), then
    to the earlier attempt. Training error is only computed for the
    candidates tied at the minimum.
    """
    learner = learner or LearnerConfig()
    if not val:
        raise ValueError("validation set is empty")
    classes = list(config.classes)
    index = {c: k for k, c in enumerate(classes)}
    y_val = np.array([index[d.label] for d in val])
    by_row = {d.row_index: d for d in train}
    s = learner.support_size or support_size(train, config, backend.context_limit, learner.summary_max_tokens)
    s = min(s, len(train))

    candidates = []
    for c in range(learner.candidates):
        attempt = attempt_offset + c
        picked = sampler.sample(None, s, seed=(learner.seed, attempt))
        try:
            h = summarize([by_row[i] for i in picked], config, backend, attempt,
                          order=learner.order, max_tokens=learner.summary_max_tokens, seed=learner.seed)
        except EmptySummary as exc:
            log.info("candidate %d skipped: %s", attempt, exc)
            continue
        pred = predict_indices(h, val, backend, learner.inference_max_tokens)
        candidates.append(_Candidate(h, pred, error_rate(pred, y_val)))

    usable = [c for c in candidates if np.any(c.val_pred != ABSTAIN)]
    if not usable:
        raise AllCandidatesFailed(f"all {learner.candidates} candidate summaries failed on validation")

    best_val = min(c.val_error for c in usable)
    tied = [c for c in usable if c.val_error == best_val]
    y_train = np.array([index[d.label] for d in train])
    for c in tied:
        c.train_error = error_rate(predict_indices(c.hypothesis, train, backend,
                                                   learner.inference_max_tokens), y_train)
    tied.sort(key=lambda c: (-c.train_error, c.hypothesis.attempt))
    best = tied[0]
    return best.hypothesis, CandidateScore(best.val_error, best.train_error, best.hypothesis.attempt)

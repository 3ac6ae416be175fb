"""Zero-shot, few-shot and embedding-KNN baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllCandidatesFailed, EmptyTrainSet, MappingFailure
from .llm.client import INFERENCE_TEMPERATURE
from .prompts import PromptConfig, fewshot_prompt, zeroshot_prompt
from .summary import ABSTAIN, INFERENCE_MAX_TOKENS, error_rate, fit_blocks, map_answer, order_examples

FEWSHOT_SUPPORT = 15
FEWSHOT_CANDIDATES = 25
KNN_CHOICES = (1, 3, 5, 7)


def _classify(prompt: str, classes: Sequence[str], backend, max_tokens: int = INFERENCE_MAX_TOKENS) -> str:
    text = backend.complete(prompt, temperature=INFERENCE_TEMPERATURE, max_tokens=max_tokens).text
    return map_answer(text, classes)


def _classify_many(prompts: Sequence[str], classes: Sequence[str], backend,
                   max_tokens: int = INFERENCE_MAX_TOKENS) -> np.ndarray:
    index = {c: k for k, c in enumerate(classes)}
    done = backend.complete_many(prompts, temperature=INFERENCE_TEMPERATURE, max_tokens=max_tokens)
    out = np.full(len(prompts), ABSTAIN, dtype=np.int64)
    for t, comp in enumerate(done):
        try:
            out[t] = index[map_answer(comp.text, classes)]
        except MappingFailure:
            pass
    return out


def zero_shot(query, config: PromptConfig, backend) -> str:
    """Metadata, query and class list only; raises ``MappingFailure`` on an unusable answer."""
    text = query.feature_text if hasattr(query, "feature_text") else str(query)
    prompt = zeroshot_prompt(config.metadata, text, config.classes, config.inference_directive)
    return _classify(prompt, config.classes, backend)


def zero_shot_many(queries: Sequence, config: PromptConfig, backend) -> np.ndarray:
    prompts = [zeroshot_prompt(config.metadata, q.feature_text, config.classes, config.inference_directive)
               for q in queries]
    return _classify_many(prompts, config.classes, backend)


@dataclass(frozen=True)
class FewShotPrompt:
    support: tuple  # labeled DataDescriptions, in prompt order
    config: PromptConfig

    def render(self, query, max_tokens: int, context_limit: int) -> str:
        text = query.feature_text if hasattr(query, "feature_text") else str(query)
        blocks = fit_blocks(
            lambda b: fewshot_prompt(self.config.metadata, b, text, self.config.inference_directive),
            [d.text for d in self.support],
            context_limit - max_tokens,
        )
        return fewshot_prompt(self.config.metadata, blocks, text, self.config.inference_directive)

    def classify_many(self, queries: Sequence, backend, max_tokens: int = INFERENCE_MAX_TOKENS) -> np.ndarray:
        prompts = [self.render(q, max_tokens, backend.context_limit) for q in queries]
        return _classify_many(prompts, self.config.classes, backend, max_tokens)


def fit_few_shot(train: Sequence, val: Sequence, config: PromptConfig, backend, sampler, *,
                 support: int = FEWSHOT_SUPPORT, candidates: int = FEWSHOT_CANDIDATES,
                 seed: int = 0) -> tuple[FewShotPrompt, float]:
    """Pick the support set (from uniform cluster samples) with the lowest validation error."""
    index = {c: k for k, c in enumerate(config.classes)}
    by_row = {d.row_index: d for d in train}
    y_val = np.array([index[d.label] for d in val])
    support = min(support, len(train))
    best, best_err = None, None
    for c in range(candidates):
        picked = sampler.sample(None, support, seed=(seed, c, 1))
        ordered = order_examples([by_row[i] for i in picked], "shuffled", config.classes, (seed, c))
        fs = FewShotPrompt(tuple(ordered), config)
        pred = fs.classify_many(val, backend)
        if np.all(pred == ABSTAIN):
            continue
        err = error_rate(pred, y_val)
        if best_err is None or err < best_err:
            best, best_err = fs, err
    if best is None:
        raise AllCandidatesFailed(f"all {candidates} few-shot prompts failed on validation")
    return best, best_err


def few_shot(query, train: Sequence, val: Sequence, config: PromptConfig, backend, sampler,
             seed: int = 0) -> str:
    fs, _ = fit_few_shot(train, val, config, backend, sampler, seed=seed)
    k = fs.classify_many([query], backend)[0]
    if k == ABSTAIN:
        raise MappingFailure("", ())
    return config.classes[k]


def _cosine_distance_to(query: np.ndarray, train: np.ndarray) -> np.ndarray:
    q = query / np.linalg.norm(query)
    t = train / np.linalg.norm(train, axis=1, keepdims=True)
    return 1.0 - t @ q


def knn_classify(query_embedding, train_embeddings, train_labels, k: int) -> int:
    """Majority label among the ``k`` nearest training points (cosine distance).

    Neighbors are ranked by distance, then index. Label ties go to the class
    whose tied neighbors have the smaller mean distance, then to the lower
    class index.
    """
    train = np.asarray(train_embeddings, dtype=np.float64)
    labels = np.asarray(train_labels, dtype=np.int64)
    if train.size == 0 or len(labels) == 0:
        raise EmptyTrainSet("no training embeddings")
    if not 1 <= k <= len(labels):
        raise ValueError(f"k={k} outside 1..{len(labels)}")
    dist = _cosine_distance_to(np.asarray(query_embedding, dtype=np.float64), train)
    nearest = np.lexsort((np.arange(len(dist)), dist))[:k]
    votes: dict[int, list[float]] = {}
    for i in nearest:
        votes.setdefault(int(labels[i]), []).append(float(dist[i]))
    return min(votes, key=lambda c: (-len(votes[c]), float(np.mean(votes[c])), c))


def select_k(train_emb, train_labels, val_emb, val_labels, choices: Sequence[int] = KNN_CHOICES) -> int:
    """k with the lowest validation error; ties to the smaller k."""
    best_k, best_err = None, None
    for k in choices:
        if k > len(train_labels):
            continue
        pred = np.array([knn_classify(q, train_emb, train_labels, k) for q in val_emb])
        err = error_rate(pred, np.asarray(val_labels))
        if best_err is None or err < best_err:
            best_k, best_err = k, err
    if best_k is None:
        raise EmptyTrainSet("training set smaller than every k choice")
    return best_k

"""AdaBoost (SAMME) over summary weak learners.

Each round draws a cluster sample under the current weights, summarizes it,
classifies every training row with the summary, and searches all K! label
permutations of those raw answers for the one with the lowest weighted error.
The learner is kept only if that error is at most ``1 - 1/K - mu`` and its raw
answers are not all identical; otherwise a fresh sample is drawn. A
zero-error learner ends training.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .discretize import DatasetEncoder
from .errors import (
    AllRoundsAbstained,
    DegenerateError,
    EmptyClass,
    EmptySummary,
    LengthMismatch,
    RoundResampleExhausted,
)
from .prompts import PromptConfig
from .sampling import ClusterSampler
from .summary import (
    ABSTAIN,
    INFERENCE_MAX_TOKENS,
    SHUFFLED,
    SUMMARY_MAX_TOKENS,
    SummaryHypothesis,
    predict_indices,
    summarize,
    support_size,
)

log = logging.getLogger(__name__)

RESAMPLE_CAP = 25


def default_mu(K: int) -> float:
    """0.08 for two classes, 0.16 for three, 0.08 more per extra class."""
    return 0.08 * (K - 1)


def weighted_error(preds, labels, w) -> float:
    preds, labels, w = np.asarray(preds), np.asarray(labels), np.asarray(w, dtype=np.float64)
    if not (len(preds) == len(labels) == len(w)):
        raise LengthMismatch(f"lengths differ: {len(preds)}, {len(labels)}, {len(w)}")
    return float(np.sum(w * (preds != labels)) / np.sum(w))


def samme_alpha(epsilon: float, K: int) -> float:
    if not 0 < epsilon < 1:
        raise DegenerateError(f"alpha undefined for epsilon={epsilon}")
    return math.log((1 - epsilon) / epsilon) + math.log(K - 1)


def apply_mapping(raw, mapping: Sequence[int]) -> np.ndarray:
    """Relabel raw class indices; abstentions stay abstentions."""
    raw = np.asarray(raw, dtype=np.int64)
    table = np.asarray(mapping, dtype=np.int64)
    out = np.full(raw.shape, ABSTAIN, dtype=np.int64)
    ok = raw != ABSTAIN
    out[ok] = table[raw[ok]]
    return out


def best_label_mapping(raw_preds, labels, w, K: int) -> tuple[tuple[int, ...], float]:
    """Lowest weighted error over all K! relabelings; first in lexicographic order wins ties.

    The raw predictions are computed once and only permuted here, so the
    search never goes back to the model.
    """
    raw = np.asarray(raw_preds, dtype=np.int64)
    labels = np.asarray(labels)
    best, best_err = None, math.inf
    for perm in itertools.permutations(range(K)):
        err = weighted_error(apply_mapping(raw, perm), labels, w)
        if err < best_err:
            best, best_err = perm, err
    return tuple(best), best_err


def acceptance_threshold(K: int, mu: float) -> float:
    return 1 - 1 / K - mu


def all_same(raw_preds) -> bool:
    raw = np.asarray(raw_preds)
    return raw.size == 0 or bool(np.all(raw == raw.flat[0]))


def accept_weak_learner(epsilon: float, K: int, mu: float, raw_preds) -> bool:
    return not (epsilon > acceptance_threshold(K, mu) or all_same(raw_preds))


def update_weights(w, misclassified, alpha: float) -> np.ndarray:
    """Multiply misclassified weights by ``exp(alpha)`` and renormalize."""
    w = np.asarray(w, dtype=np.float64)
    new = w * np.exp(alpha * np.asarray(misclassified, dtype=np.float64))
    return new / new.sum()


def dominant_alpha(previous: Sequence[float]) -> float:
    """Vote weight for a zero-error round: outweighs every earlier round combined."""
    return 1.0 + float(sum(previous))


@dataclass
class RoundRecord:
    hypothesis: object
    mapping: tuple[int, ...]
    epsilon: float
    alpha: float
    weights: np.ndarray  # distribution after this round's update
    raw_preds: np.ndarray
    resamples: int


@dataclass
class BoostResult:
    rounds: list[RoundRecord]
    initial_weights: np.ndarray
    stopped_early: bool = False


def boost(labels, K: int, propose: Callable[[np.ndarray, int, int], tuple[object, np.ndarray]], *,
          T: int, mu: float | None = None, resample_cap: int = RESAMPLE_CAP) -> BoostResult:
    """The boosting loop, independent of where weak learners come from.

    ``propose(w, round, resample)`` returns ``(hypothesis, raw_preds)`` with raw
    predictions as class indices on the training rows (``ABSTAIN`` allowed);
    it may raise ``EmptySummary`` to skip a draw.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    mu = default_mu(K) if mu is None else mu
    w = np.full(n, 1.0 / n)
    w0 = w.copy()
    rounds: list[RoundRecord] = []
    for r in range(T):
        for resample in range(resample_cap):
            try:
                h, raw = propose(w, r, resample)
            except EmptySummary:
                continue
            raw = np.asarray(raw, dtype=np.int64)
            mapping, eps = best_label_mapping(raw, labels, w, K)
            if accept_weak_learner(eps, K, mu, raw):
                break
            log.debug("round %d resample %d rejected: eps=%.4f", r, resample, eps)
        else:
            raise RoundResampleExhausted(
                f"round {r}: no weak learner with error <= {acceptance_threshold(K, mu):.4f} "
                f"after {resample_cap} draws")
        wrong = apply_mapping(raw, mapping) != labels
        if eps == 0:
            alpha = dominant_alpha([rr.alpha for rr in rounds])
            rounds.append(RoundRecord(h, mapping, eps, alpha, w.copy(), raw, resample + 1))
            return BoostResult(rounds, w0, stopped_early=True)
        alpha = samme_alpha(eps, K)
        w = update_weights(w, wrong, alpha)
        rounds.append(RoundRecord(h, mapping, eps, alpha, w.copy(), raw, resample + 1))
        log.info("round %d: eps=%.4f alpha=%.4f (%d draws)", r, eps, alpha, resample + 1)
    return BoostResult(rounds, w0)


def vote(mapped_preds: np.ndarray, alphas: Sequence[float], K: int) -> np.ndarray:
    """Weighted majority over rounds (rows of ``mapped_preds``); ties to the lower class index.

    Columns where every round abstained come back as ``ABSTAIN``.
    """
    mapped = np.atleast_2d(np.asarray(mapped_preds, dtype=np.int64))
    scores = np.zeros((K, mapped.shape[1]))
    for row, a in zip(mapped, alphas):
        for k in range(K):
            scores[k] += a * (row == k)
    out = np.argmax(scores, axis=0).astype(np.int64)
    out[np.all(mapped == ABSTAIN, axis=0)] = ABSTAIN
    return out


def choose_T(mapped_val: np.ndarray, alphas: Sequence[float], y_val, K: int) -> tuple[int, list[float]]:
    """Smallest prefix length reaching the minimum validation error."""
    errors = []
    for t in range(1, len(alphas) + 1):
        pred = vote(mapped_val[:t], alphas[:t], K)
        errors.append(float(np.mean(pred != np.asarray(y_val))) if len(y_val) else 0.0)
    best = min(errors)
    return errors.index(best) + 1, errors


# -- the summary-boosting model ------------------------------------------------

@dataclass
class TrainConfig:
    rounds: int = 30
    mu: float | None = None
    resample_cap: int = RESAMPLE_CAP
    support_size: int | None = None
    order: str = SHUFFLED
    cluster_threshold: float = 0.05
    summary_max_tokens: int = SUMMARY_MAX_TOKENS
    inference_max_tokens: int = INFERENCE_MAX_TOKENS
    seed: int = 0


@dataclass
class EnsembleRound:
    hypothesis: SummaryHypothesis
    mapping: tuple[int, ...]
    alpha: float
    epsilon: float
    resamples: int = 0

    def to_dict(self) -> dict:
        d = self.hypothesis.to_dict()
        d.update(mapping=list(self.mapping), alpha=self.alpha, epsilon=self.epsilon, resamples=self.resamples)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleRound":
        return cls(SummaryHypothesis.from_dict(d), tuple(d["mapping"]), float(d["alpha"]),
                   float(d.get("epsilon", float("nan"))), int(d.get("resamples", 0)))


@dataclass
class EnsembleModel:
    rounds: list[EnsembleRound]
    classes: tuple[str, ...]
    encoder: DatasetEncoder
    chosen_T: int
    schema_fingerprint: str = ""
    validation_errors: list[float] = field(default_factory=list)
    seed: int | None = None

    @property
    def alphas(self) -> list[float]:
        return [r.alpha for r in self.rounds]

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "encodings": self.encoder.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "chosen_T": self.chosen_T,
            "schema_fingerprint": self.schema_fingerprint,
            "validation_errors": self.validation_errors,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        return cls(
            rounds=[EnsembleRound.from_dict(r) for r in d["rounds"]],
            classes=tuple(d["classes"]),
            encoder=DatasetEncoder.from_dict(d["encodings"]),
            chosen_T=int(d["chosen_T"]),
            schema_fingerprint=d.get("schema_fingerprint", ""),
            validation_errors=list(d.get("validation_errors", [])),
            seed=d.get("seed"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "EnsembleModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def raw_predictions(self, queries: Sequence, backend, T: int | None = None,
                        max_tokens: int = INFERENCE_MAX_TOKENS) -> np.ndarray:
        """Mapped class index per (round, query) for the first ``T`` rounds."""
        T = self.chosen_T if T is None else T
        rows = []
        for rnd in self.rounds[:T]:
            raw = predict_indices(rnd.hypothesis, queries, backend, max_tokens)
            rows.append(apply_mapping(raw, rnd.mapping))
        return np.array(rows, dtype=np.int64).reshape(T, len(queries))

    def predict_indices(self, queries: Sequence, backend) -> np.ndarray:
        mapped = self.raw_predictions(queries, backend)
        return vote(mapped, self.alphas[:self.chosen_T], len(self.classes))

    def predict_many(self, queries: Sequence, backend) -> list[str | None]:
        """Class per query, ``None`` where every round abstained."""
        return [None if k == ABSTAIN else self.classes[k] for k in self.predict_indices(queries, backend)]


def predict(model: EnsembleModel, query, backend) -> str:
    if model.chosen_T < 1:
        raise ValueError("model has no rounds")
    k = model.predict_indices([query], backend)[0]
    if k == ABSTAIN:
        raise AllRoundsAbstained("every round abstained on this query")
    return model.classes[k]


class SummaryLearnerSource:
    """Proposes summary weak learners for ``boost``."""

    def __init__(self, train, config: PromptConfig, backend, sampler: ClusterSampler, cfg: TrainConfig):
        self.train = list(train)
        self.by_row = {d.row_index: d for d in self.train}
        self.order = [d.row_index for d in self.train]
        self.config = config
        self.backend = backend
        self.sampler = sampler
        self.cfg = cfg
        self.attempts = 0
        s = cfg.support_size or support_size(self.train, config, backend.context_limit, cfg.summary_max_tokens)
        self.s = min(s, len(self.train))

    def __call__(self, w: np.ndarray, r: int, resample: int):
        attempt = self.attempts
        self.attempts += 1
        p = dict(zip(self.order, w))
        picked = self.sampler.sample(p, self.s, seed=(self.cfg.seed, r, resample))
        h = summarize([self.by_row[i] for i in picked], self.config, self.backend, attempt,
                      order=self.cfg.order, max_tokens=self.cfg.summary_max_tokens, seed=self.cfg.seed)
        raw = predict_indices(h, self.train, self.backend, self.cfg.inference_max_tokens)
        return h, raw


def train(ds, descriptions: dict, config: PromptConfig, backend, cfg: TrainConfig | None = None, *,
          train_idx: Sequence[int], val_idx: Sequence[int], encoder: DatasetEncoder | None = None,
          sampler: ClusterSampler | None = None) -> tuple[EnsembleModel, BoostResult]:
    """Boost summary learners on ``train_idx`` and pick the ensemble size on ``val_idx``.

    ``descriptions`` maps row index to ``DataDescription``.
    """
    cfg = cfg or TrainConfig()
    K = ds.n_classes
    labels_all = ds.labels()
    train_descs = [descriptions[i] for i in train_idx]
    val_descs = [descriptions[i] for i in val_idx]
    y_train = labels_all[list(train_idx)]
    y_val = labels_all[list(val_idx)]
    missing = [ds.classes[k] for k in range(K) if not np.any(y_train == k)]
    if missing:
        raise EmptyClass(f"no training rows for classes {missing}")

    if sampler is None:
        sampler = ClusterSampler.from_descriptions(
            train_descs, {i: int(labels_all[i]) for i in train_idx}, backend, cfg.cluster_threshold)
    source = SummaryLearnerSource(train_descs, config, backend, sampler, cfg)
    result = boost(y_train, K, source, T=cfg.rounds, mu=cfg.mu, resample_cap=cfg.resample_cap)

    rounds = [EnsembleRound(rr.hypothesis, rr.mapping, rr.alpha, rr.epsilon, rr.resamples) for rr in result.rounds]
    model = EnsembleModel(rounds, tuple(ds.classes), encoder or DatasetEncoder(), len(rounds),
                          ds.fingerprint(), seed=cfg.seed)
    if val_descs:
        mapped_val = model.raw_predictions(val_descs, backend, T=len(rounds),
                                           max_tokens=cfg.inference_max_tokens)
        model.chosen_T, model.validation_errors = choose_T(mapped_val, model.alphas, y_val, K)
    return model, result

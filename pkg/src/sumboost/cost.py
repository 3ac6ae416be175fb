"""Back-of-the-envelope compute and token-cost estimates for a boosting run."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

TRAIN_SHARE = Fraction(1, 2)
VAL_SHARE = Fraction(1, 10)


@dataclass(frozen=True)
class CostEstimate:
    total_tokens: int
    dollar_cost: float
    n: int
    rounds: int
    resamples: int
    summary_tokens: int
    prediction_tokens: int
    price_per_1k: float


def estimate_cost(n: int, rounds: int, resamples: int, summary_tokens: int = 2048,
                  prediction_tokens: int = 210, price_per_1k: float = 0.002) -> CostEstimate:
    """Tokens exchanged when every round tries ``resamples`` summaries.

    Each try fills one summary prompt and classifies the training half of the
    data; each round also classifies the validation tenth once::

        rounds * [resamples * (S + 0.5 n P) + 0.1 n P]
    """
    for name, v in (("n", n), ("rounds", rounds), ("resamples", resamples),
                    ("summary_tokens", summary_tokens), ("prediction_tokens", prediction_tokens)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if price_per_1k < 0:
        raise ValueError("price must be non-negative")
    per_round = resamples * (summary_tokens + TRAIN_SHARE * n * prediction_tokens) \
        + VAL_SHARE * n * prediction_tokens
    total = rounds * per_round
    if total.denominator != 1:
        # fractional example counts (n not a multiple of 20) round to the nearest token
        total = round(total)
    total = int(total)
    return CostEstimate(total, total / 1000 * price_per_1k, n, rounds, resamples,
                        summary_tokens, prediction_tokens, price_per_1k)


def estimate_passes(mode: str, a: int, b: int) -> int:
    """LLM passes: ``finetune`` is epochs x examples x 2 (forward and backward),
    ``boost`` is rounds x resamples per round."""
    if a <= 0 or b <= 0:
        raise ValueError("parameters must be positive")
    if mode == "finetune":
        return a * b * 2
    if mode == "boost":
        return a * b
    raise ValueError(f"unknown mode {mode!r}")

"""Continuous-to-text encoders.

Every scheme maps a number to a *level index* (monotone in the value) and a
level phrase. Boundaries are fitted on training values only and are immutable
afterwards, so encoding test values can never move them.

Quantiles use the nearest-rank rule: the ``i/B`` cut of ``n`` sorted values is
the value at 1-based rank ``ceil(i*n/B)``. A value equal to a cut falls in the
lower bin. When several cuts coincide (heavy ties, constant columns) a value
sitting on them takes the middle of the levels it spans.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DataError, EmptyColumn, NotFitted

BINS_QUANTIFIED = "bins_quantified"
BINS_PLAIN = "bins_plain"
PERCENTILE = "percentile"
STD_DEV = "std_dev"
QUARTILES = "quartiles"
SCHEMES = (BINS_QUANTIFIED, BINS_PLAIN, PERCENTILE, STD_DEV, QUARTILES)

QUANTIFIERS = {
    4: ("very low", "low", "high", "very high"),
    5: ("very low", "low", "medium", "high", "very high"),
    7: ("extremely low", "very low", "low", "medium", "high", "very high", "extremely high"),
    9: ("lowest", "extremely low", "very low", "low", "medium", "high", "very high",
        "extremely high", "highest"),
}

STD_DEV_PHRASES = (
    "is three std-dev below the mean value",
    "is two std-dev below the mean value",
    "is within one std-dev below the mean value",
    "is within one std-dev above the mean value",
    "is two std-dev above the mean value",
    "is three std-dev above the mean value",
)

QUARTILE_PHRASES = (
    "is less than the first quartile value",
    "is between the first quartile and median values",
    "is between median and third quartile values",
    "is more than the third quartile value",
)

_ONES = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
         "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
         "seventeen", "eighteen", "nineteen")
_TENS = ("", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety")
_IRREGULAR_ORDINALS = {"one": "first", "two": "second", "three": "third", "five": "fifth",
                       "eight": "eighth", "nine": "ninth", "twelve": "twelfth"}


def cardinal_words(n: int) -> str:
    if not 0 <= n <= 100:
        raise ValueError(f"only 0..100 supported, got {n}")
    if n == 100:
        return "one hundred"
    if n < 20:
        return _ONES[n]
    tens, ones = divmod(n, 10)
    return _TENS[tens] if ones == 0 else f"{_TENS[tens]}-{_ONES[ones]}"


def ordinal_words(n: int) -> str:
    """``41 -> 'forty-first'``, ``0 -> 'zeroth'``."""
    words = cardinal_words(n)
    head, sep, last = words.rpartition("-")
    if " " in last:
        head, sep, last = words.rpartition(" ")
    if last in _IRREGULAR_ORDINALS:
        last = _IRREGULAR_ORDINALS[last]
    elif last.endswith("y"):
        last = last[:-1] + "ieth"
    else:
        last = last + "th"
    return f"{head}{sep}{last}"


@dataclass(frozen=True)
class Encoding:
    scheme: str = BINS_QUANTIFIED
    bin_count: int = 5
    quantifiers: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DataError(f"unknown encoding scheme {self.scheme!r}")
        if self.scheme in (BINS_QUANTIFIED, BINS_PLAIN) and self.bin_count < 2:
            raise DataError("bin_count must be at least 2")
        if self.scheme == BINS_QUANTIFIED:
            quantifiers = tuple(self.quantifiers) or QUANTIFIERS.get(self.bin_count, ())
            if len(quantifiers) != self.bin_count:
                raise DataError(
                    f"{self.bin_count} bins need {self.bin_count} quantifiers, got {len(quantifiers)}")
            if not all(q.strip() for q in quantifiers):
                raise DataError("quantifier names must be nonempty")
            object.__setattr__(self, "quantifiers", quantifiers)

    @property
    def n_levels(self) -> int:
        if self.scheme in (BINS_QUANTIFIED, BINS_PLAIN):
            return self.bin_count
        if self.scheme == PERCENTILE:
            return 100
        if self.scheme == STD_DEV:
            return len(STD_DEV_PHRASES)
        return len(QUARTILE_PHRASES)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "bin_count": self.bin_count, "quantifiers": list(self.quantifiers)}

    @classmethod
    def from_dict(cls, d: dict) -> "Encoding":
        return cls(d["scheme"], int(d.get("bin_count", 5)), tuple(d.get("quantifiers", ())))


def default_encoding() -> Encoding:
    return Encoding(BINS_QUANTIFIED, 5)


def parse_encoding(text: str) -> Encoding:
    """CLI spelling: ``bins5``, ``plain10``, ``percentile``, ``std_dev``, ``quartiles``."""
    text = text.strip().lower()
    if text.startswith("bins"):
        return Encoding(BINS_QUANTIFIED, int(text[4:] or 5))
    if text.startswith("plain"):
        return Encoding(BINS_PLAIN, int(text[5:] or 10))
    if text in (PERCENTILE, STD_DEV, QUARTILES):
        return Encoding(text)
    raise DataError(f"unknown encoding {text!r}")


def nearest_rank(sorted_values: Sequence[float], num: int, den: int) -> float:
    """The ``num/den`` quantile under the nearest-rank rule (exact integer ranks)."""
    n = len(sorted_values)
    rank = max(1, -(-num * n // den))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class BinBoundaries:
    """Fitted state for one column.

    ``edges`` are non-decreasing cut values (quantile cuts for the bin schemes,
    Q1/median/Q3 for quartiles). ``train_values`` is kept sorted for the
    percentile scheme; ``mean``/``std`` serve the std-dev scheme.
    """

    column: str
    scheme: str
    edges: tuple[float, ...] = ()
    mean: float = 0.0
    std: float = 0.0
    train_values: tuple[float, ...] = ()
    fitted_on: str = ""

    @property
    def unique_edges(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.edges)))

    def to_dict(self) -> dict:
        return {
            "column": self.column,
            "scheme": self.scheme,
            "edges": list(self.edges),
            "mean": self.mean,
            "std": self.std,
            "train_values": list(self.train_values),
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BinBoundaries":
        return cls(
            column=d["column"],
            scheme=d["scheme"],
            edges=tuple(d.get("edges", ())),
            mean=float(d.get("mean", 0.0)),
            std=float(d.get("std", 0.0)),
            train_values=tuple(d.get("train_values", ())),
            fitted_on=d.get("fitted_on", ""),
        )


def fit(train_values: Sequence[float], enc: Encoding, column: str = "", fitted_on: str = "") -> BinBoundaries:
    values = sorted(float(v) for v in train_values)
    if not values:
        raise EmptyColumn(f"cannot fit encoder on empty column {column!r}")
    if enc.scheme in (BINS_QUANTIFIED, BINS_PLAIN):
        edges = tuple(nearest_rank(values, i, enc.bin_count) for i in range(1, enc.bin_count))
        return BinBoundaries(column, enc.scheme, edges=edges, fitted_on=fitted_on)
    if enc.scheme == QUARTILES:
        edges = tuple(nearest_rank(values, i, 4) for i in (1, 2, 3))
        return BinBoundaries(column, enc.scheme, edges=edges, fitted_on=fitted_on)
    if enc.scheme == STD_DEV:
        n = len(values)
        mean = math.fsum(values) / n
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
        return BinBoundaries(column, enc.scheme, mean=mean, std=std, fitted_on=fitted_on)
    return BinBoundaries(column, enc.scheme, train_values=tuple(values), fitted_on=fitted_on)


def _edge_level(value: float, edges: Sequence[float]) -> int:
    lo = bisect.bisect_left(edges, value)   # edges strictly below value
    hi = bisect.bisect_right(edges, value)  # edges at or below value
    return (lo + hi) // 2


def level_index(value: float, b: BinBoundaries | None) -> int:
    if b is None:
        raise NotFitted("encoder has not been fitted")
    value = float(value)
    if b.scheme in (BINS_QUANTIFIED, BINS_PLAIN, QUARTILES):
        return _edge_level(value, b.edges)
    if b.scheme == PERCENTILE:
        below = bisect.bisect_left(b.train_values, value)
        return min(99, (100 * below) // len(b.train_values))
    # std-dev: six ranges, tails beyond three deviations folded into the outer phrases
    d = value - b.mean
    if b.std > 0:
        d /= b.std
    elif d != 0:
        d = math.copysign(math.inf, d)
    if d >= 0:
        return 3 if d <= 1 else 4 if d <= 2 else 5
    return 2 if d >= -1 else 1 if d >= -2 else 0


def encode(value: float, b: BinBoundaries | None, enc: Encoding) -> str:
    if b is None:
        raise NotFitted("encoder has not been fitted")
    level = level_index(value, b)
    if enc.scheme == BINS_QUANTIFIED:
        return enc.quantifiers[level]
    if enc.scheme == BINS_PLAIN:
        return f"falls in the {ordinal_words(level + 1)} out of {cardinal_words(enc.bin_count)} bins of values"
    if enc.scheme == PERCENTILE:
        return f"falls in the {ordinal_words(level)} percentile"
    if enc.scheme == STD_DEV:
        return STD_DEV_PHRASES[level]
    return QUARTILE_PHRASES[level]


class DatasetEncoder:
    """Fits one ``BinBoundaries`` per continuous column and renders rows as text."""

    def __init__(self, encoding: Encoding | None = None, boundaries: dict[str, BinBoundaries] | None = None):
        self.encoding = encoding or default_encoding()
        self.boundaries = dict(boundaries or {})

    def fit(self, ds, train_idx) -> "DatasetEncoder":
        fingerprint = f"{ds.fingerprint()}:{len(train_idx)}"
        self.boundaries = {
            col.name: fit(ds.values(col.name, train_idx), self.encoding, col.name, fingerprint)
            for col in ds.feature_columns
            if col.kind == "continuous"
        }
        return self

    def encode_row(self, row: dict, ds) -> dict[str, str]:
        """Feature cells as text; continuous ones replaced by their level phrase."""
        out = {}
        for col in ds.feature_columns:
            value = row[col.name]
            if col.kind == "continuous":
                b = self.boundaries.get(col.name)
                out[col.name] = encode(value, b, self.encoding)
            else:
                out[col.name] = str(value)
        return out

    def to_dict(self) -> dict:
        return {
            "encoding": self.encoding.to_dict(),
            "boundaries": {k: b.to_dict() for k, b in self.boundaries.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetEncoder":
        return cls(
            Encoding.from_dict(d["encoding"]),
            {k: BinBoundaries.from_dict(b) for k, b in d.get("boundaries", {}).items()},
        )

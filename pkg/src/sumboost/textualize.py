"""Tabular records to natural-language data descriptions.

A description keeps the feature text and the label text apart, so the same
object is a labeled training example (joined with the separator) and, with
the label dropped, an inference query.
"""

from __future__ import annotations

import json
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError, LengthExhausted, MissingPlaceholder
from .prompts import SEPARATOR, PromptConfig, conversion_prompt, example_block

MIN_WORDS = 20
MAX_WORDS = 80
CONVERT_CAP = 8
CONVERT_TEMPERATURE = 0.8
CONVERT_MAX_TOKENS = 160


def word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class DataDescription:
    feature_text: str
    label_text: str
    row_index: int
    label: str = ""
    separator: str = SEPARATOR

    @property
    def word_count(self) -> int:
        return word_count(self.feature_text)

    @property
    def text(self) -> str:
        """Labeled form, as listed in summarization and few-shot prompts."""
        return example_block(self.feature_text, self.label_text)

    @property
    def query(self) -> str:
        return self.feature_text

    def to_dict(self) -> dict:
        return {
            "row_index": self.row_index,
            "feature_text": self.feature_text,
            "label_text": self.label_text,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DataDescription":
        return cls(d["feature_text"], d["label_text"], int(d["row_index"]), d.get("label", ""))


def save_descriptions(descs: Iterable[DataDescription], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in sorted(descs, key=lambda d: d.row_index):
            fh.write(json.dumps(d.to_dict(), ensure_ascii=False) + "\n")


def load_descriptions(path) -> list[DataDescription]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(DataDescription.from_dict(json.loads(line)))
    return out


def label_text(ds, label: str, config: PromptConfig) -> str:
    return config.label_template.format(target=ds.target, label=label)


def describe_llm(row_index: int, ds, encoder, backend, config: PromptConfig, *,
                 cap: int = CONVERT_CAP, min_words: int = MIN_WORDS,
                 max_words: int = MAX_WORDS) -> DataDescription:
    """Ask the LLM to narrate one record's features.

    The target column never enters the prompt. Samples outside the word
    window are discarded and redrawn with the next attempt index.
    """
    row = ds.rows[row_index]
    attrs = encoder.encode_row(row, ds)
    names = {c.name: c.description for c in ds.feature_columns if c.description}
    prompt = conversion_prompt(config.metadata, attrs, config.convert_directive, names)
    lengths = []
    for attempt in range(cap):
        text = backend.complete(prompt, temperature=CONVERT_TEMPERATURE,
                                max_tokens=CONVERT_MAX_TOKENS, attempt=attempt).text.strip()
        n = word_count(text)
        if min_words <= n <= max_words:
            label = row[ds.target]
            return DataDescription(text, label_text(ds, label, config), row_index, label)
        lengths.append(n)
    raise LengthExhausted(
        f"row {row_index}: no description within {min_words}-{max_words} words after {cap} "
        f"attempts (got {lengths})")


@dataclass(frozen=True)
class PromptTemplate:
    """Hand-written description template.

    ``text`` uses ``{placeholder}`` fields and one ``###`` marker; everything
    after the marker is the label part. ``aliases`` maps a placeholder to the
    column it reads when the two differ (masked templates).
    """

    text: str
    target: str
    columns: tuple[str, ...] = ()
    aliases: dict = field(default_factory=dict)

    def placeholders(self) -> list[str]:
        return [f for _, f, _, _ in string.Formatter().parse(self.text) if f]

    def source(self, placeholder: str) -> str:
        return self.aliases.get(placeholder, placeholder)

    @classmethod
    def from_dict(cls, d: dict) -> "PromptTemplate":
        return cls(d["text"], d["target"], tuple(d.get("columns", ())), dict(d.get("aliases", {})))

    @classmethod
    def load(cls, path) -> "PromptTemplate":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def check_template(tmpl: PromptTemplate, ds) -> None:
    """Every schema column must be used and every placeholder must name a column."""
    used = {tmpl.source(p) for p in tmpl.placeholders()}
    names = {c.name for c in ds.schema}
    if used - names:
        raise MissingPlaceholder(f"template reads unknown columns {sorted(used - names)}")
    if names - used:
        raise DataError(f"template leaves columns unused: {sorted(names - used)}")


def describe_template(row: dict, tmpl: PromptTemplate, row_index: int = -1) -> DataDescription:
    """Fill ``tmpl`` from ``row`` (cells already rendered as text) and split at ``###``."""
    if SEPARATOR not in tmpl.text:
        raise DataError("template has no separator marker")
    values = {}
    for p in tmpl.placeholders():
        col = tmpl.source(p)
        if col not in row:
            raise MissingPlaceholder(f"placeholder {{{p}}} has no value in the row")
        values[p] = row[col]
    filled = tmpl.text.format(**values)
    features, _, label_part = filled.partition(SEPARATOR)
    label = str(row.get(tmpl.target, ""))
    return DataDescription(features.strip(), label_part.strip(), row_index, label)


def mask_attribute_names(tmpl: PromptTemplate) -> PromptTemplate:
    """Swap attribute names for ``f1..fd`` to hide prior knowledge about them."""
    columns = tmpl.columns
    if not columns:
        head = tmpl.text.partition(SEPARATOR)[0]
        seen = []
        for _, f, _, _ in string.Formatter().parse(head):
            if f and tmpl.source(f) not in seen:
                seen.append(tmpl.source(f))
        columns = tuple(seen)
    if not columns:
        return tmpl
    label_part = tmpl.text.partition(SEPARATOR)[2].strip()
    fields = ", ".join(f"f{i} = {{f{i}}}" for i in range(1, len(columns) + 1))
    text = f"This example has features {fields}. {SEPARATOR} {label_part}"
    aliases = {p: tmpl.source(p) for p in tmpl.placeholders() if p not in columns}
    aliases.update({f"f{i}": c for i, c in enumerate(columns, start=1)})
    return PromptTemplate(text, tmpl.target, columns, aliases)


def describe_dataset(ds, encoder, backend=None, config: PromptConfig | None = None, *,
                     rows: Sequence[int] | None = None, template: PromptTemplate | None = None,
                     parallelism: int = 1, cap: int = CONVERT_CAP) -> list[DataDescription]:
    """Describe many rows; output order follows ``rows`` whatever the completion order."""
    rows = list(range(len(ds))) if rows is None else list(rows)
    if template is not None:
        out = []
        for i in rows:
            cells = encoder.encode_row(ds.rows[i], ds)
            cells[ds.target] = ds.rows[i][ds.target]
            out.append(describe_template(cells, template, i))
        return out
    if backend is None or config is None:
        raise ValueError("LLM descriptions need a backend and a prompt config")

    def one(i):
        return describe_llm(i, ds, encoder, backend, config, cap=cap)

    if parallelism <= 1:
        return [one(i) for i in rows]
    with ThreadPoolExecutor(parallelism) as pool:
        return list(pool.map(one, rows))

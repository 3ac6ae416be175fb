"""Prompt layouts shared by every stage.

The fixed header lines double as markers: the scripted/rule-based mock backend
keys on them to tell conversion, summarization and classification prompts
apart, so pipeline code is identical for real and mock providers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .errors import DataError, EmptyDirective

SEPARATOR = "###"
RECORD_HEADER = "Attributes of the record:"
EXAMPLES_HEADER = "Examples:"
QUERY_HEADER = "New example:"
CONVERT_DIRECTIVE = (
    "Describe the record above concisely and accurately in a short paragraph of plain prose. "
    "Use your creativity."
)
CONVERT_MARKER = "Use your creativity."
TLDR = "Tl;dr"


@dataclass(frozen=True)
class PromptConfig:
    """Per-dataset knobs: metadata, summary directive and inference prefix.

    ``inference_directive`` defaults to a prefix that lists every class, since
    naming the classes is what keeps completions inside the label space.
    """

    metadata: str = ""
    classes: tuple[str, ...] = ()
    summary_directive: str = TLDR
    inference_directive: str = ""
    label_template: str = "Hence the {target} is {label}."
    convert_directive: str = CONVERT_DIRECTIVE

    def __post_init__(self):
        if not self.summary_directive.strip():
            raise EmptyDirective("summary directive must be nonempty")
        if not self.inference_directive:
            object.__setattr__(self, "inference_directive", default_inference_directive(self.classes))

    @classmethod
    def for_dataset(cls, ds, path: str | Path | None = None, **overrides) -> "PromptConfig":
        values = {}
        if path is not None:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
            unknown = set(values) - set(cls.__dataclass_fields__)
            if unknown:
                raise DataError(f"unknown prompt config keys: {sorted(unknown)}")
        values.setdefault("metadata", ds.metadata)
        values["classes"] = tuple(ds.classes)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def with_directive(self, directive: str) -> "PromptConfig":
        return replace(self, summary_directive=directive)

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "classes": list(self.classes),
            "summary_directive": self.summary_directive,
            "inference_directive": self.inference_directive,
            "label_template": self.label_template,
            "convert_directive": self.convert_directive,
        }


def default_inference_directive(classes: Sequence[str]) -> str:
    if not classes:
        return "Therefore this example is likely to be:"
    return f"Therefore this example is likely to be ({', '.join(classes)}):"


def conversion_prompt(metadata: str, attributes: dict[str, str], directive: str = CONVERT_DIRECTIVE,
                      descriptions: dict[str, str] | None = None) -> str:
    lines = []
    for name, value in attributes.items():
        label = (descriptions or {}).get(name) or name
        lines.append(f"- {label} : {value}")
    head = f"{metadata.strip()}\n\n" if metadata.strip() else ""
    return f"{head}{RECORD_HEADER}\n" + "\n".join(lines) + f"\n\n{directive}"


def parse_conversion_attributes(prompt: str) -> dict[str, str]:
    """Inverse of the listing inside ``conversion_prompt`` (used by the mock)."""
    _, _, tail = prompt.partition(RECORD_HEADER)
    out = {}
    for line in tail.strip().splitlines():
        if not line.startswith("- "):
            break
        name, _, value = line[2:].partition(" : ")
        out[name.strip()] = value.strip()
    return out


def example_block(feature_text: str, label_text: str) -> str:
    return f"{feature_text.strip()}\n{SEPARATOR}\n{label_text.strip()}"


def summary_prompt(metadata: str, blocks: Sequence[str], directive: str) -> str:
    if not directive.strip():
        raise EmptyDirective("summary directive must be nonempty")
    head = f"{metadata.strip()}\n\n" if metadata.strip() else ""
    return f"{head}{EXAMPLES_HEADER}\n\n" + "\n\n".join(blocks) + f"\n\n{directive.strip()}"


def inference_prompt(summary_text: str, query_text: str, prefix: str) -> str:
    return f"{summary_text.strip()}\n\n{QUERY_HEADER}\n{query_text.strip()}\n\n{prefix.strip()}"


def fewshot_prompt(metadata: str, blocks: Sequence[str], query_text: str, prefix: str) -> str:
    head = f"{metadata.strip()}\n\n" if metadata.strip() else ""
    body = f"{EXAMPLES_HEADER}\n\n" + "\n\n".join(blocks)
    return f"{head}{body}\n\n{QUERY_HEADER}\n{query_text.strip()}\n\n{prefix.strip()}"


def zeroshot_prompt(metadata: str, query_text: str, classes: Sequence[str], prefix: str) -> str:
    head = f"{metadata.strip()}\n\n" if metadata.strip() else ""
    return (f"{head}The possible classes are: {', '.join(classes)}.\n\n"
            f"{QUERY_HEADER}\n{query_text.strip()}\n\n{prefix.strip()}")


def extract_query(prompt: str) -> str:
    """The query paragraph of a classification prompt ('' when absent)."""
    if QUERY_HEADER not in prompt:
        return ""
    tail = prompt.rsplit(QUERY_HEADER, 1)[1].strip("\n")
    query, _, _ = tail.rpartition("\n\n")
    return query if query else tail

"""Tabular dataset ingestion and deterministic stratified splitting."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    MissingCell,
    MissingTarget,
    RaggedRow,
    TooFewRows,
    UnknownClass,
)

CONTINUOUS = "continuous"
DISCRETE = "discrete"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    description: str | None = None

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class TabularDataset:
    """Typed columns, rows, target and metadata.

    ``rows`` holds one dict per record; continuous cells are floats, everything
    else stays as the raw string. The target column is part of ``schema``.
    """

    schema: tuple[ColumnSpec, ...]
    rows: tuple[dict, ...]
    target: str
    classes: tuple[str, ...]
    metadata: str = ""
    name: str = "dataset"
    class_ratios: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise DataError("column names must be unique")
        if self.target not in names:
            raise MissingTarget(f"target column {self.target!r} not in schema")
        if len(self.classes) < 2:
            raise DataError(f"need at least 2 classes, got {len(self.classes)}")
        if len(set(self.classes)) != len(self.classes):
            raise DataError("duplicate class labels")
        known = set(self.classes)
        counts = dict.fromkeys(self.classes, 0)
        for i, row in enumerate(self.rows):
            label = row[self.target]
            if label not in known:
                raise UnknownClass(f"row {i}: target {label!r} not in {list(self.classes)}")
            counts[label] += 1
        n = max(len(self.rows), 1)
        object.__setattr__(self, "class_ratios", tuple(counts[c] / n for c in self.classes))

    def __len__(self):
        return len(self.rows)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def feature_columns(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.schema if c.name != self.target)

    def column(self, name: str) -> ColumnSpec:
        for c in self.schema:
            if c.name == name:
                return c
        raise KeyError(name)

    def labels(self) -> np.ndarray:
        """Class index of every row, in ``classes`` order."""
        lookup = {c: k for k, c in enumerate(self.classes)}
        return np.array([lookup[r[self.target]] for r in self.rows], dtype=np.int64)

    def values(self, name: str, idx: Sequence[int] | None = None) -> list:
        idx = range(len(self.rows)) if idx is None else idx
        return [self.rows[i][name] for i in idx]

    def fingerprint(self) -> str:
        """Hash of the schema and class list; stored in model files."""
        payload = {
            "columns": [[c.name, c.kind] for c in self.schema],
            "target": self.target,
            "classes": list(self.classes),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SplitAssignment:
    train_idx: tuple[int, ...]
    val_idx: tuple[int, ...]
    test_idx: tuple[int, ...]
    seed: int

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_idx), len(self.val_idx), len(self.test_idx)

    def to_dict(self) -> dict:
        return {
            "train": list(self.train_idx),
            "val": list(self.val_idx),
            "test": list(self.test_idx),
            "seed": self.seed,
        }


def _parses_as_number(cell: str) -> bool:
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def load_dataset(csv_path, meta_path, require_target: bool = True) -> TabularDataset:
    """Read a headered CSV plus its JSON metadata document.

    The metadata declares ``target``, ``classes``, ``metadata_text`` and an
    optional ``columns`` list of ``{name, kind?, description?}``. A column is
    continuous when every cell parses as a finite number and the metadata does
    not force it to ``discrete``; the target is always discrete.

    With ``require_target=False`` a file without the target column (rows to
    be predicted) is accepted and its target cells are set to the first class.
    """
    meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
    for key in ("target", "classes"):
        if key not in meta:
            raise DataError(f"metadata is missing {key!r}")

    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{csv_path}: empty file") from None
        raw = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise RaggedRow(f"{csv_path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
            cells = [c.strip() for c in rec]
            for name, cell in zip(header, cells):
                if cell == "":
                    raise MissingCell(f"{csv_path}:{lineno}: empty cell in column {name!r}")
            raw.append(cells)

    target = meta["target"]
    if target not in header:
        if require_target:
            raise MissingTarget(f"target column {target!r} not found in {csv_path}")
        header.append(target)
        raw = [cells + [str(meta["classes"][0])] for cells in raw]

    declared = {c["name"]: c for c in meta.get("columns", [])}
    unknown = set(declared) - set(header)
    if unknown:
        raise DataError(f"metadata describes unknown columns: {sorted(unknown)}")

    schema = []
    for j, name in enumerate(header):
        decl = declared.get(name, {})
        kind = decl.get("kind")
        if name == target:
            kind = DISCRETE
        elif kind is None:
            numeric = all(_parses_as_number(r[j]) for r in raw)
            kind = CONTINUOUS if numeric and raw else DISCRETE
        schema.append(ColumnSpec(name, kind, decl.get("description")))

    rows = []
    for cells in raw:
        row = {}
        for spec, cell in zip(schema, cells):
            if spec.kind == CONTINUOUS:
                try:
                    row[spec.name] = float(cell)
                except ValueError:
                    raise DataError(f"column {spec.name!r} declared continuous but has {cell!r}") from None
            else:
                row[spec.name] = cell
        rows.append(row)

    return TabularDataset(
        schema=tuple(schema),
        rows=tuple(rows),
        target=target,
        classes=tuple(str(c) for c in meta["classes"]),
        metadata=meta.get("metadata_text", ""),
        name=meta.get("name", Path(csv_path).stem),
    )


def largest_remainder(quotas: Sequence[float], total: int, caps: Sequence[int] | None = None) -> list[int]:
    """Round ``quotas`` to integers summing to ``total``.

    Floors first, then the leftover units go to the largest fractional parts
    (ties to the lower index). ``caps`` bounds each entry from above. Pass
    ``Fraction`` quotas when exact ties matter.
    """
    floors = [math.floor(q) for q in quotas]
    if caps is not None:
        floors = [min(f, c) for f, c in zip(floors, caps)]
    left = total - sum(floors)
    order = sorted(range(len(quotas)), key=lambda k: (-(quotas[k] - math.floor(quotas[k])), k))
    counts = list(floors)
    while left > 0:
        progressed = False
        for k in order:
            if left == 0:
                break
            if caps is not None and counts[k] >= caps[k]:
                continue
            counts[k] += 1
            left -= 1
            progressed = True
        if not progressed:
            raise ValueError("caps too small for requested total")
    return counts


def split(ds: TabularDataset, seed: int) -> SplitAssignment:
    """Stratified 50/10/40 train/validation/test split.

    Split sizes are ``floor(0.5 N)`` and ``floor(0.1 N)`` with the rest going to
    test. Each class contributes to train and validation in proportion to its
    size (largest-remainder rounding), so per-class train counts stay within one
    of half the class count.
    """
    n = len(ds)
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    labels = ds.labels()
    rng = np.random.default_rng(seed)
    per_class = []
    for k in range(ds.n_classes):
        members = np.flatnonzero(labels == k)
        per_class.append(rng.permutation(members).tolist())

    sizes = [len(m) for m in per_class]
    n_train = n // 2
    n_val = n // 10
    train_counts = largest_remainder([Fraction(s * n_train, n) for s in sizes], n_train, caps=sizes)
    remaining = [s - t for s, t in zip(sizes, train_counts)]
    val_counts = largest_remainder([Fraction(s * n_val, n) for s in sizes], n_val, caps=remaining)

    train, val, test = [], [], []
    for members, t, v in zip(per_class, train_counts, val_counts):
        train.extend(members[:t])
        val.extend(members[t:t + v])
        test.extend(members[t + v:])
    return SplitAssignment(tuple(sorted(train)), tuple(sorted(val)), tuple(sorted(test)), seed)

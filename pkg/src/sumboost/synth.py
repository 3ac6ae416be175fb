"""Synthetic tabular task with a matching noisy_rule oracle.

The label is a function of one discrete column (``group``); two continuous
columns carry no signal. The oracle knows the rule and answers each
classification prompt correctly with probability ``1 - flip``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .llm.mock import NOISY_RULE, OracleSpec

CLASS_NAMES = ("approved", "declined", "deferred", "escalated")
GROUP_NAMES = ("red", "green", "blue", "amber", "violet", "teal", "olive", "coral")


def make_synthetic(n: int = 100, k: int = 2, *, flip: float = 0.3, seed: int = 0):
    """Returns ``(header, rows, meta, oracle)``; rows are lists of strings."""
    if not 2 <= k <= len(CLASS_NAMES):
        raise ValueError(f"k must be in 2..{len(CLASS_NAMES)}")
    classes = CLASS_NAMES[:k]
    groups = GROUP_NAMES[:2 * k]
    rng = np.random.default_rng(seed)
    header = ["group", "age", "income", "outcome"]
    rows = []
    for i in range(n):
        g = int(rng.integers(len(groups))) if i >= len(groups) else i  # every group appears
        age = round(float(rng.uniform(18, 80)), 1)
        income = round(float(rng.lognormal(10.5, 0.4)), 2)
        rows.append([groups[g], f"{age}", f"{income}", classes[g // 2]])
    meta = {
        "name": "synthetic",
        "target": "outcome",
        "classes": list(classes),
        "metadata_text": "Each record is an application with a colour-coded group, the applicant's "
                         "age and income. The outcome is the decision on the application.",
        "columns": [
            {"name": "group", "kind": "discrete"},
            {"name": "age", "kind": "continuous"},
            {"name": "income", "kind": "continuous"},
        ],
    }
    rules = [{"match": rf"\bgroup is ({groups[2 * j]}|{groups[2 * j + 1]})\b", "label": classes[j]}
             for j in range(k)]
    oracle = OracleSpec(NOISY_RULE, classes=classes, rules=rules, default=classes[-1],
                        flip=flip, seed=seed)
    return header, rows, meta, oracle


def write_synthetic(out_dir, **kw) -> dict[str, Path]:
    """Writes ``data.csv``, ``meta.json`` and ``oracle.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header, rows, meta, oracle = make_synthetic(**kw)
    paths = {"data": out / "data.csv", "meta": out / "meta.json", "oracle": out / "oracle.json"}
    with open(paths["data"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    paths["meta"].write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    paths["oracle"].write_text(json.dumps(oracle.to_dict(), indent=2) + "\n", encoding="utf-8")
    return paths

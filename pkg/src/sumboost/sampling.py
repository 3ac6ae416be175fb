"""Per-class clustering of description embeddings and weighted cluster sampling.

Within each class the descriptions are clustered (average linkage, cosine
distance). A row in cluster ``C_j`` gets base weight ``n / |C_j|`` so that small
clusters are over-represented; the base weights are normalized, multiplied by
the boosting distribution restricted to the class (itself renormalized), and
normalized again. Each class then contributes its share ``s * r[k]`` of the
sample, drawn without replacement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dataset import largest_remainder
from .errors import DimensionMismatch, EmptyClass, SampleTooLarge

DEFAULT_THRESHOLD = 0.05


def cosine_distances(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValueError("cosine distance undefined for a zero vector")
    u = x / norms[:, None]
    d = 1.0 - u @ u.T
    np.fill_diagonal(d, 0.0)
    return np.clip(d, 0.0, 2.0)


def hac_cluster(embeddings, threshold: float = DEFAULT_THRESHOLD) -> list[list[int]]:
    """Average-linkage agglomerative clustering under cosine distance.

    Repeatedly merges the closest pair of clusters while that distance is at
    most ``threshold``. Ties go to the lexicographically smallest pair of
    cluster ids, where a cluster's id is its smallest member. Returns clusters
    as sorted index lists, ordered by smallest member.
    """
    rows = [np.asarray(e, dtype=np.float64).ravel() for e in embeddings]
    if not rows:
        raise ValueError("need at least one embedding")
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise DimensionMismatch(f"embeddings have mixed dimensions {sorted(dims)}")
    n = len(rows)
    dist = cosine_distances(np.vstack(rows))
    members: list[list[int] | None] = [[i] for i in range(n)]
    active = np.ones(n, dtype=bool)
    big = np.inf
    work = dist.copy()
    np.fill_diagonal(work, big)

    while active.sum() > 1:
        masked = np.where(active[:, None] & active[None, :], work, big)
        flat = int(np.argmin(masked))  # row-major: first minimum is the smallest (i, j)
        i, j = divmod(flat, n)
        if masked[i, j] > threshold:
            break
        if i > j:
            i, j = j, i
        ni, nj = len(members[i]), len(members[j])
        # Lance-Williams update for average linkage; slot i keeps the merged cluster
        merged = (ni * work[i] + nj * work[j]) / (ni + nj)
        work[i, :] = merged
        work[:, i] = merged
        work[i, i] = big
        members[i] = members[i] + members[j]
        members[j] = None
        active[j] = False
        work[j, :] = big
        work[:, j] = big

    return sorted((sorted(m) for m in members if m is not None), key=lambda m: m[0])


@dataclass(frozen=True)
class ClusterModel:
    """Per-class clusters of global row indices, built once and reused each round."""

    classes: tuple[int, ...]
    clusters: dict  # class index -> list of clusters (lists of global indices)
    threshold: float = DEFAULT_THRESHOLD

    def to_json(self) -> str:
        return json.dumps({
            "linkage": "average",
            "metric": "cosine",
            "threshold": self.threshold,
            "clusters": {str(k): v for k, v in self.clusters.items()},
        }, indent=2)


def build_cluster_model(indices: Sequence[int], labels: Sequence[int], embeddings,
                        threshold: float = DEFAULT_THRESHOLD) -> ClusterModel:
    """Cluster each class separately. ``embeddings[t]`` belongs to ``indices[t]``."""
    indices = list(indices)
    labels = np.asarray(labels)
    emb = np.asarray(embeddings, dtype=np.float64)
    clusters = {}
    for k in sorted(set(labels.tolist())):
        pos = np.flatnonzero(labels == k)
        local = hac_cluster(emb[pos], threshold)
        clusters[int(k)] = [[indices[pos[t]] for t in c] for c in local]
    return ClusterModel(tuple(clusters), clusters, threshold)


def class_counts(s: int, class_sizes: Sequence[int]) -> list[int]:
    """``s * r[k]`` per class, rounded by largest remainder so the counts sum to ``s``."""
    n = sum(class_sizes)
    return largest_remainder([Fraction(s * c, n) for c in class_sizes], s, caps=list(class_sizes))


def class_weights(clusters: list[list[int]], p: dict[int, float] | None = None) -> tuple[list[int], np.ndarray]:
    """Sampling distribution over one class's rows.

    Returns ``(rows, w)`` where ``w`` sums to 1. ``p`` maps global row index to
    its boosting weight; ``None`` means uniform.
    """
    rows = [i for c in clusters for i in c]
    n = len(rows)
    base = np.array([n / len(c) for c in clusters for _ in c], dtype=np.float64)
    base /= base.sum()
    if p is None:
        return rows, base
    pk = np.array([p[i] for i in rows], dtype=np.float64)
    total = pk.sum()
    if total <= 0:
        return rows, base
    w = base * (pk / total)
    return rows, w / w.sum()


class ClusterSampler:
    """Draws boosting-weighted, cluster-balanced, class-stratified samples."""

    def __init__(self, model: ClusterModel, labels: dict[int, int]):
        self.model = model
        self.labels = labels  # global row index -> class index

    @classmethod
    def from_descriptions(cls, descriptions, label_of: dict[int, int], backend,
                          threshold: float = DEFAULT_THRESHOLD) -> "ClusterSampler":
        descriptions = list(descriptions)
        idx = [d.row_index for d in descriptions]
        labels = [label_of[i] for i in idx]
        emb = backend.embed([d.feature_text for d in descriptions])
        return cls(build_cluster_model(idx, labels, emb, threshold), dict(zip(idx, labels)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def sample(self, p: dict[int, float] | Sequence[float] | None, s: int, seed) -> list[int]:
        if s > self.size:
            raise SampleTooLarge(f"asked for {s} samples from {self.size} rows")
        if p is not None and not isinstance(p, dict):
            order = sorted(self.labels)
            p = dict(zip(order, p))
        rng = np.random.default_rng(seed)
        classes = self.model.classes
        sizes = [sum(len(c) for c in self.model.clusters[k]) for k in classes]
        counts = class_counts(s, sizes)
        out = []
        for k, m in zip(classes, counts):
            clusters = self.model.clusters[k]
            if not clusters:
                raise EmptyClass(f"class {k} has no rows")
            if m == 0:
                continue
            rows, w = class_weights(clusters, p)
            picked = rng.choice(len(rows), size=m, replace=False, p=w)
            out.extend(rows[t] for t in picked)
        return out


def cluster_sample(descriptions, label_of: dict[int, int], p, s: int, backend, seed,
                   threshold: float = DEFAULT_THRESHOLD) -> list[int]:
    """One-shot form: embed, cluster, then draw ``s`` row indices."""
    return ClusterSampler.from_descriptions(descriptions, label_of, backend, threshold).sample(p, s, seed)

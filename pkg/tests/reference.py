"""Independent reference implementations used as test oracles."""

import itertools
import math
import re

import numpy as np

from sumboost.dataset import DISCRETE, ColumnSpec, TabularDataset
from sumboost.llm import LLMClient, MockProvider
from sumboost.prompts import QUERY_HEADER
from sumboost.textualize import DataDescription

ABSTAIN = -1


def samme_reference(labels, K, mu, candidates, T, cap=25):
    """Straight-line boosting loop in plain Python floats.

    ``candidates`` yields raw prediction lists in proposal order. Returns a
    list of ``(epsilon, mapping, alpha, weights)`` per accepted round.
    """
    n = len(labels)
    w = [1.0 / n] * n
    trace = []
    alphas = []
    it = iter(candidates)
    for _ in range(T):
        for _ in range(cap):
            raw = next(it)
            best_err, best_perm = None, None
            for perm in itertools.permutations(range(K)):
                wrong = [raw[i] == ABSTAIN or perm[raw[i]] != labels[i] for i in range(n)]
                err = sum(wi for wi, bad in zip(w, wrong) if bad) / sum(w)
                if best_err is None or err < best_err:
                    best_err, best_perm, best_wrong = err, perm, wrong
            if best_err <= 1 - 1 / K - mu and len(set(raw)) > 1:
                break
        else:
            raise RuntimeError("resample cap exhausted")
        if best_err == 0:
            alpha = 1 + sum(alphas)
            trace.append((best_err, best_perm, alpha, list(w)))
            return trace
        alpha = math.log((1 - best_err) / best_err) + math.log(K - 1)
        alphas.append(alpha)
        w = [wi * math.exp(alpha) if bad else wi for wi, bad in zip(w, best_wrong)]
        total = sum(w)
        w = [wi / total for wi in w]
        trace.append((best_err, best_perm, alpha, list(w)))
    return trace


def make_prediction_table(rng, labels, K, n_candidates):
    """Raw class predictions (or ABSTAIN) per candidate, with varied behaviour."""
    n = len(labels)
    table = []
    for _ in range(n_candidates):
        kind = rng.random()
        if kind < 0.05:
            raw = list(labels)  # perfect
        elif kind < 0.12:
            raw = [int(rng.integers(K))] * n  # constant
        else:
            perm = rng.permutation(K) if rng.random() < 0.3 else np.arange(K)
            raw = []
            for y in labels:
                if rng.random() < 0.08:
                    raw.append(ABSTAIN)
                elif rng.random() < rng.uniform(0.55, 0.95):
                    raw.append(int(perm[y]))
                else:
                    raw.append(int(rng.integers(K)))
        table.append(raw)
    return table


def scripted_training_setup(labels, K, table, val_labels=()):
    """Dataset, descriptions and a scripted backend whose c-th summary predicts ``table[c]``.

    Training rows are 0..n-1, validation rows follow; validation answers are
    always correct.
    """
    classes = tuple(f"class{chr(ord('a') + k)}" for k in range(K))
    all_labels = list(labels) + list(val_labels)
    rows = tuple({"x": f"v{i}", "y": classes[y]} for i, y in enumerate(all_labels))
    ds = TabularDataset((ColumnSpec("x", DISCRETE), ColumnSpec("y", DISCRETE)), rows, "y", classes)
    descs = {i: DataDescription(f"Row {i} is here.", f"Hence the y is {classes[y]}.", i, classes[y])
             for i, y in enumerate(all_labels)}
    n = len(labels)
    counter = [0]

    def respond(prompt, attempt):
        if QUERY_HEADER not in prompt:
            c = counter[0]
            counter[0] += 1
            return f"tag {c}"
        c = int(re.search(r"tag (\d+)", prompt).group(1))
        row = int(re.search(r"Row (\d+) is here", prompt).group(1))
        if row >= n:
            return classes[all_labels[row]]
        k = table[c][row]
        return "??" if k == ABSTAIN else classes[k]

    backend = LLMClient(MockProvider(respond, embedding_dim=16), parallelism=1)
    return ds, descs, backend, counter


def naive_hac(x, threshold):
    """Average linkage from scratch: recompute every cluster distance each step."""
    x = np.asarray(x, dtype=float)
    n = len(x)

    def d(i, j):
        return 1 - x[i] @ x[j] / (np.linalg.norm(x[i]) * np.linalg.norm(x[j]))

    clusters = [[i] for i in range(n)]
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                dist = np.mean([d(i, j) for i in clusters[a] for j in clusters[b]])
                if best is None or dist < best[0]:
                    best = (dist, a, b)
        dist, a, b = best
        if dist > threshold:
            break
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
        clusters.sort(key=lambda c: c[0])
    return sorted(clusters, key=lambda c: c[0])


def clumpy(rng, n, dim=6):
    centers = rng.normal(size=(int(rng.integers(1, 4)), dim))
    which = rng.integers(len(centers), size=n)
    return centers[which] + rng.normal(scale=rng.uniform(0.05, 0.4), size=(n, dim))


def rank_oracle(train, value, n_bins):
    """Bin of ``value`` for distinct training values, from its sorted rank only.

    Nearest-rank cuts put the element of rank j (1-based) in bin
    floor((j - 1) * B / n). Valid when n >= B, so that no two cuts coincide.
    """
    ordered = sorted(train)
    j = ordered.index(value) + 1
    return min(n_bins - 1, (j - 1) * n_bins // len(ordered))


def percentile_oracle(train, value):
    below = sum(1 for t in train if t < value)
    return min(99, math.floor(100 * below / len(train)))


def std_oracle(train, value):
    z = (value - np.mean(train)) / np.std(train)
    for level, hi in enumerate((-2, -1, 0)):
        if z < hi:
            return level
    if z == 0:
        return 3
    for level, hi in zip((3, 4), (1, 2)):
        if z <= hi:
            return level
    return 5


def brute_knn(q, train, labels, k):
    """Full distance table, stable sort, vote, tie by mean distance then class."""
    dist = []
    for i, t in enumerate(train):
        cos = float(np.dot(q, t) / (np.linalg.norm(q) * np.linalg.norm(t)))
        dist.append((1 - cos, i))
    dist.sort()
    votes = {}
    for d, i in dist[:k]:
        votes.setdefault(int(labels[i]), []).append(d)
    return sorted(votes, key=lambda c: (-len(votes[c]), sum(votes[c]) / len(votes[c]), c))[0]

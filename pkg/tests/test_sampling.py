from fractions import Fraction

import numpy as np
import pytest

from sumboost.dataset import largest_remainder
from sumboost.errors import DimensionMismatch, SampleTooLarge
from sumboost.llm import LLMClient, MockProvider
from sumboost.sampling import (
    ClusterSampler,
    build_cluster_model,
    class_counts,
    class_weights,
    cosine_distances,
    hac_cluster,
)
from sumboost.textualize import DataDescription

from reference import clumpy, naive_hac


def test_hac_matches_naive_oracle():
    rng = np.random.default_rng(0)
    merged_any = False
    for _ in range(50):
        x = clumpy(rng, int(rng.integers(1, 13)))
        got = hac_cluster(x, 0.05)
        assert got == naive_hac(x, 0.05)
        merged_any |= len(got) < len(x)
    assert merged_any


def test_hac_examples():
    e1, e2 = [1.0, 0.0], [0.0, 1.0]
    assert hac_cluster([e1, e1, e2]) == [[0, 1], [2]]
    assert hac_cluster([e1]) == [[0]]
    assert hac_cluster([e1, e2], threshold=1.0) == [[0, 1]]
    with pytest.raises(DimensionMismatch):
        hac_cluster([[1.0, 0.0], [1.0, 0.0, 0.0]])


def test_cosine_distances_scale_free():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 4))
    assert np.allclose(cosine_distances(x), cosine_distances(x * 7.5))
    assert np.allclose(np.diag(cosine_distances(x)), 0)


def test_class_counts_are_largest_remainder():
    rng = np.random.default_rng(2)
    for _ in range(200):
        sizes = rng.integers(1, 30, size=int(rng.integers(2, 5))).tolist()
        s = int(rng.integers(0, sum(sizes) + 1))
        counts = class_counts(s, sizes)
        assert counts == largest_remainder([Fraction(s * c, sum(sizes)) for c in sizes], s, caps=sizes)
        assert sum(counts) == s
    assert class_counts(10, [6, 3, 1]) == [6, 3, 1]


def test_class_weights_inverse_cluster_size():
    rows, w = class_weights([[0, 1, 2], [3]])
    assert rows == [0, 1, 2, 3]
    assert np.allclose(w, [1 / 6, 1 / 6, 1 / 6, 1 / 2])
    rows, w = class_weights([[0, 1], [2]], {0: 0.5, 1: 0.25, 2: 0.25})
    base = np.array([0.25, 0.25, 0.5])
    expected = base * np.array([0.5, 0.25, 0.25])
    assert np.allclose(w, expected / expected.sum())


def _sampler(labels, vectors):
    idx = list(range(len(labels)))
    model = build_cluster_model(idx, labels, vectors)
    return ClusterSampler(model, dict(zip(idx, labels)))


def test_sample_counts_and_membership():
    rng = np.random.default_rng(3)
    labels = [0] * 12 + [1] * 6 + [2] * 2
    sampler = _sampler(labels, rng.normal(size=(20, 5)))
    for seed in range(50):
        picked = sampler.sample(None, 7, seed)
        assert len(set(picked)) == 7
        per_class = [sum(labels[i] == k for i in picked) for k in range(3)]
        assert per_class == class_counts(7, [12, 6, 2])
    assert sampler.sample(None, 7, 11) == sampler.sample(None, 7, 11)
    with pytest.raises(SampleTooLarge):
        sampler.sample(None, 21, 0)


def test_sample_follows_boosting_weights():
    labels = [0] * 10
    sampler = _sampler(labels, np.eye(10))
    p = np.full(10, 0.01)
    p[4] = 0.91
    hits = sum(sampler.sample(p, 1, seed)[0] == 4 for seed in range(2000))
    assert hits / 2000 > 0.85


def test_from_descriptions_and_json():
    descs = [DataDescription(f"text {i % 3}", "y", i, "a") for i in range(9)]
    client = LLMClient(MockProvider(lambda p, a: ""))
    sampler = ClusterSampler.from_descriptions(descs, {i: i % 2 for i in range(9)}, client)
    # identical texts embed identically, so they share a cluster
    for k, clusters in sampler.model.clusters.items():
        for c in clusters:
            assert len({i % 3 for i in c}) == 1
    assert '"linkage": "average"' in sampler.model.to_json()

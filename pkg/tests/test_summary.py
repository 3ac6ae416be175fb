import numpy as np
import pytest

from sumboost.errors import AllCandidatesFailed, ContextOverflow, EmptySummary, MappingFailure
from sumboost.llm import LLMClient, MockProvider
from sumboost.prompts import EXAMPLES_HEADER, QUERY_HEADER, PromptConfig
from sumboost.sampling import ClusterSampler, build_cluster_model
from sumboost.summary import (
    ABSTAIN,
    GROUPED,
    LearnerConfig,
    SummaryHypothesis,
    fit_blocks,
    fit_summary,
    infer,
    map_answer,
    order_examples,
    predict_indices,
    summarize,
    support_size,
)
from sumboost.textualize import DataDescription

CLASSES = ("yes", "no")
CFG = PromptConfig("A toy task.", CLASSES)


def descs(n, offset=0):
    return [DataDescription(f"Row {i} has the value {i % 4} and nothing else.", f"Hence it is {CLASSES[i % 2]}.",
                            i, CLASSES[i % 2]) for i in range(offset, offset + n)]


def sampler_for(ds):
    idx = [d.row_index for d in ds]
    labels = [CLASSES.index(d.label) for d in ds]
    return ClusterSampler(build_cluster_model(idx, labels, np.eye(len(idx))), dict(zip(idx, labels)))


def test_map_answer():
    assert map_answer("  YES, clearly", CLASSES) == "yes"
    assert map_answer("non-relapse", ("relapse", "non-relapse")) == "non-relapse"
    with pytest.raises(MappingFailure):
        map_answer("maybe", CLASSES)
    with pytest.raises(MappingFailure) as info:
        map_answer("yes or no", CLASSES)
    assert set(info.value.hits) == {"yes", "no"}


def test_order_examples():
    d = descs(6)
    grouped = order_examples(d, GROUPED, CLASSES, 0)
    assert [x.label for x in grouped] == ["yes"] * 3 + ["no"] * 3
    a = order_examples(d, "shuffled", CLASSES, (1, 2))
    assert a == order_examples(d, "shuffled", CLASSES, (1, 2))
    assert sorted(x.row_index for x in a) == list(range(6))
    with pytest.raises(ValueError):
        order_examples(d, "sideways", CLASSES, 0)


def test_fit_blocks_drops_whole_trailing_blocks():
    blocks = [f"block {i} " + "word " * 20 for i in range(10)]
    kept = fit_blocks(lambda b: "head\n" + "\n".join(b), blocks, 100)
    assert kept == blocks[:len(kept)] and 0 < len(kept) < 10
    with pytest.raises(ContextOverflow):
        fit_blocks(lambda b: "word " * 200, blocks, 100)


def test_summarize_and_infer():
    prompts = []

    def respond(prompt, attempt):
        prompts.append(prompt)
        return "It depends on the value." if QUERY_HEADER not in prompt else "no"

    client = LLMClient(MockProvider(respond))
    h = summarize(descs(4), CFG, client, attempt=2, seed=1)
    assert h.summary_text == "It depends on the value."
    assert sorted(h.source_sample) == [0, 1, 2, 3]
    assert EXAMPLES_HEADER in prompts[0] and prompts[0].endswith("Tl;dr")
    assert infer(h, descs(1)[0], client) == "no"
    assert SummaryHypothesis.from_dict(h.to_dict()) == h


def test_summarize_rejects_empty():
    client = LLMClient(MockProvider(lambda p, a: "   "))
    with pytest.raises(EmptySummary):
        summarize(descs(2), CFG, client)


def test_summarize_respects_context():
    long = [DataDescription("word " * 300, "Hence it is yes.", i, "yes") for i in range(20)]
    client = LLMClient(MockProvider(lambda p, a: "ok"), context_limit=2048)
    h = summarize(long, CFG, client)
    assert 0 < len(h.source_sample) < 20


def test_predict_indices_retries_once_then_abstains():
    def respond(prompt, attempt):
        if "Row 0 " in prompt:
            return "unclear"
        if "Row 1 " in prompt:
            return "unclear" if attempt == 0 else "yes"
        return "no"

    client = LLMClient(MockProvider(respond))
    h = SummaryHypothesis("s", CFG.inference_directive, CLASSES)
    assert predict_indices(h, descs(3), client).tolist() == [ABSTAIN, 0, 1]


def test_support_size_fills_context():
    client_limit = 2048
    s = support_size(descs(500), CFG, client_limit)
    assert 1 <= s < 500


def _fit_backend(val_errors, train_errors=None):
    """Candidate c answers ``val_errors[c]`` validation and ``train_errors[c]`` training rows wrong."""
    train_errors = train_errors or [0] * len(val_errors)

    def respond(prompt, attempt):
        if QUERY_HEADER not in prompt:
            return f"summary number {attempt}"
        c = int(prompt.split("summary number ")[1].split()[0])
        row = int(prompt.rsplit("Row ", 1)[1].split()[0])
        truth = CLASSES[row % 2]
        wrong = row - 100 < val_errors[c] if row >= 100 else row < train_errors[c]
        return CLASSES[1 - CLASSES.index(truth)] if wrong else truth
    return LLMClient(MockProvider(respond))


def test_fit_summary_returns_min_validation_error():
    errs = [5, 3, 1, 4, 1, 2]
    train, val = descs(20), descs(10, offset=100)
    h, score = fit_summary(train, val, CFG, _fit_backend(errs), sampler_for(train),
                           LearnerConfig(candidates=len(errs), support_size=5))
    assert score.validation_error == 0.1
    assert h.attempt == 2  # ties (2 and 4) have equal training error, so the earlier attempt wins


def test_fit_summary_all_failed():
    client = LLMClient(MockProvider(lambda p, a: "summary" if QUERY_HEADER not in p else "??"))
    train, val = descs(8), descs(4, offset=100)
    with pytest.raises(AllCandidatesFailed):
        fit_summary(train, val, CFG, client, sampler_for(train), LearnerConfig(candidates=3, support_size=2))


def test_fit_summary_tie_prefers_higher_training_error():
    train, val = descs(20), descs(10, offset=100)
    backend = _fit_backend([1, 3, 1, 1], [2, 0, 6, 6])
    h, score = fit_summary(train, val, CFG, backend, sampler_for(train),
                           LearnerConfig(candidates=4, support_size=5))
    assert (h.attempt, score.training_error) == (2, 0.3)

import itertools
import math

import numpy as np
import pytest

from sumboost.boosting import (
    ABSTAIN,
    EnsembleModel,
    TrainConfig,
    accept_weak_learner,
    apply_mapping,
    best_label_mapping,
    boost,
    choose_T,
    default_mu,
    dominant_alpha,
    predict,
    samme_alpha,
    train,
    update_weights,
    vote,
    weighted_error,
)
from sumboost.errors import (
    AllRoundsAbstained,
    DegenerateError,
    EmptySummary,
    LengthMismatch,
    RoundResampleExhausted,
)
from sumboost.prompts import PromptConfig
from sumboost.textualize import DataDescription

from reference import make_prediction_table, samme_reference, scripted_training_setup


def test_samme_alpha_values():
    assert samme_alpha(0.25, 2) == pytest.approx(math.log(3))
    assert samme_alpha(0.5, 3) == pytest.approx(math.log(2))
    with pytest.raises(DegenerateError):
        samme_alpha(0.0, 2)
    with pytest.raises(DegenerateError):
        samme_alpha(1.0, 2)


def test_default_mu():
    assert default_mu(2) == pytest.approx(0.08)
    assert default_mu(3) == pytest.approx(0.16)


def test_accept_thresholds():
    assert not accept_weak_learner(0.43, 2, 0.08, [0, 1])
    assert accept_weak_learner(0.41, 2, 0.08, [0, 1])
    assert not accept_weak_learner(0.51, 3, 0.16, [0, 1])
    assert accept_weak_learner(0.50, 3, 0.16, [0, 1])
    assert not accept_weak_learner(0.1, 2, 0.08, [1, 1, 1])


def test_weighted_error():
    assert weighted_error([0, 1, 1], [0, 0, 1], [0.5, 0.25, 0.25]) == 0.25
    assert weighted_error([ABSTAIN, 1], [0, 1], [1, 1]) == 0.5
    with pytest.raises(LengthMismatch):
        weighted_error([0], [0, 1], [1, 1])


def test_label_mapping_search():
    raw = [1, 1, 0, 0]
    mapping, err = best_label_mapping(raw, [0, 0, 1, 1], np.full(4, 0.25), 2)
    assert mapping == (1, 0) and err == 0
    # 0.5 either way: the identity comes first
    assert best_label_mapping([0, 1], [0, 0], [0.5, 0.5], 2)[0] == (0, 1)
    assert apply_mapping([2, ABSTAIN, 0], (1, 2, 0)).tolist() == [0, ABSTAIN, 1]


def test_label_mapping_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        K = int(rng.integers(2, 5))
        n = int(rng.integers(1, 15))
        raw = rng.integers(-1, K, size=n)
        y = rng.integers(0, K, size=n)
        w = rng.random(n) + 0.01
        errs = {p: sum(w[i] for i in range(n) if raw[i] < 0 or p[raw[i]] != y[i]) / w.sum()
                for p in itertools.permutations(range(K))}
        best = min(errs.values())
        first = next(p for p in itertools.permutations(range(K)) if errs[p] == best)
        mapping, err = best_label_mapping(raw, y, w, K)
        assert err == pytest.approx(best, abs=1e-12)
        assert abs(errs[mapping] - best) < 1e-12
        assert mapping == first or abs(errs[first] - errs[mapping]) < 1e-12


def test_update_weights():
    w = update_weights([0.25] * 4, [True, False, False, False], math.log(3))
    assert np.allclose(w, [0.5, 1 / 6, 1 / 6, 1 / 6])


def test_dominant_alpha():
    assert dominant_alpha([]) == 1.0
    assert dominant_alpha([0.5, 1.5]) == 3.0


def test_vote_and_ties():
    mapped = np.array([[0, 1, ABSTAIN], [1, 1, ABSTAIN]])
    assert vote(mapped, [1.0, 1.0], 2).tolist() == [0, 1, ABSTAIN]
    assert vote(mapped, [1.0, 2.0], 2).tolist() == [1, 1, ABSTAIN]


def test_choose_T_prefers_smaller():
    mapped = np.array([[0, 0, 1], [0, 1, 1], [0, 1, 1]])
    T, errors = choose_T(mapped, [1.0, 2.0, 2.0], [0, 1, 1], 2)
    assert errors == [pytest.approx(1 / 3), 0.0, 0.0]
    assert T == 2


def test_boost_matches_reference_loop():
    rng = np.random.default_rng(5)
    for _ in range(30):
        K = int(rng.integers(2, 4))
        n = int(rng.integers(4, 13))
        y = rng.integers(0, K, size=n)
        table = make_prediction_table(rng, y, K, 400)
        calls = iter(table)
        result = boost(y, K, lambda w, r, s: ("h", next(calls)), T=6)
        ref = samme_reference(y.tolist(), K, default_mu(K), table, 6)
        assert len(result.rounds) == len(ref)
        for rec, (eps, perm, alpha, w) in zip(result.rounds, ref):
            assert abs(rec.epsilon - eps) <= 1e-12
            assert rec.mapping == perm
            assert abs(rec.alpha - alpha) <= 1e-12
            assert np.max(np.abs(rec.weights - np.array(w))) <= 1e-12


def test_boost_zero_error_stops():
    y = [0, 1, 0, 1]
    result = boost(y, 2, lambda w, r, s: ("h", [1, 0, 1, 0]), T=5)
    assert result.stopped_early and len(result.rounds) == 1
    assert result.rounds[0].mapping == (1, 0)
    assert result.rounds[0].alpha == 1.0


def test_boost_resample_exhausted():
    with pytest.raises(RoundResampleExhausted):
        boost([0, 1, 0, 1], 2, lambda w, r, s: ("h", [0, 0, 0, 0]), T=2, resample_cap=3)


def test_boost_skips_empty_summaries():
    answers = iter([None, [0, 1, 0, 0]])

    def propose(w, r, s):
        a = next(answers)
        if a is None:
            raise EmptySummary("empty")
        return "h", a

    result = boost([0, 1, 0, 1], 2, propose, T=1)
    assert result.rounds[0].resamples == 2


def _trained(seed=0):
    rng = np.random.default_rng(seed)
    y = [0, 1, 0, 1, 1, 0, 0, 1, 1, 0]
    table = make_prediction_table(rng, y, 2, 300)
    ds, descs, backend, _ = scripted_training_setup(y, 2, table, val_labels=[0, 1, 1])
    cfg = TrainConfig(rounds=4, support_size=4, seed=seed)
    model, result = train(ds, descs, PromptConfig.for_dataset(ds), backend, cfg,
                          train_idx=range(10), val_idx=[10, 11, 12])
    return model, result, descs, backend


def test_train_records_chosen_T_and_round_trip(tmp_path):
    model, result, descs, backend = _trained()
    assert 1 <= model.chosen_T <= len(model.rounds) == len(result.rounds)
    assert len(model.validation_errors) == len(model.rounds)
    path = tmp_path / "model.json"
    model.save(path)
    again = EnsembleModel.load(path)
    queries = [descs[i] for i in range(13)]
    assert again.predict_many(queries, backend) == model.predict_many(queries, backend)
    assert again.to_dict() == model.to_dict()
    for key in ("classes", "encodings", "rounds", "chosen_T", "schema_fingerprint"):
        assert key in model.to_dict()


def test_predict_all_abstain():
    model, _, descs, backend = _trained()

    class Silent:
        context_limit = backend.context_limit

        def complete_many(self, prompts, **kw):
            return [type("C", (), {"text": "??"})() for _ in prompts]

        def complete(self, prompt, **kw):
            return type("C", (), {"text": "??"})()

    with pytest.raises(AllRoundsAbstained):
        predict(model, DataDescription("Row 0 is here.", "", 0), Silent())

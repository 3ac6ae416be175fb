import pytest

from sumboost.cost import estimate_cost, estimate_passes


def test_worked_example():
    est = estimate_cost(175, 30, 20, 2048, 210, 0.002)
    assert est.total_tokens == 12_364_050
    assert abs(est.dollar_cost - 24.7281) < 1e-9


def test_hand_computed():
    est = estimate_cost(100, 1, 1, 1000, 100, 0.002)
    assert est.total_tokens == 7000
    assert est.dollar_cost == pytest.approx(0.014)


def test_formula_against_loop():
    for n in (20, 40, 60):
        for t in (1, 3):
            for r in (1, 2, 5):
                tokens = 0
                for _ in range(t):
                    for _ in range(r):
                        tokens += 2048 + (n // 2) * 210
                    tokens += (n // 10) * 210
                assert estimate_cost(n, t, r).total_tokens == tokens


@pytest.mark.parametrize("args", [(0, 1, 1), (10, 0, 1), (10, 1, 0), (10, 1, 1, -5)])
def test_rejects_non_positive(args):
    with pytest.raises(ValueError):
        estimate_cost(*args)


def test_passes():
    assert estimate_passes("finetune", 20, 175) == 7000
    assert estimate_passes("boost", 50, 25) == 1250
    assert estimate_passes("boost", 1, 1) == 1
    with pytest.raises(ValueError):
        estimate_passes("boost", 0, 1)
    with pytest.raises(ValueError):
        estimate_passes("pretrain", 1, 1)

import math
from unittest.mock import MagicMock

import pytest

from common.budget import Budget, BudgetExceededError
from census.enumeration import (CensusTable, build_census, classify_sphere, enumerate_annulus, enumerate_ball,
                                enumerate_sphere, fit_log_linear, growth_exponent, shard_plan, sphere_counts,
                                sphere_words, stream_digest)
from groups.models import GroupModel


@pytest.fixture
def f2():
    return GroupModel.from_spec("free(2)")


@pytest.fixture
def pz():
    return GroupModel.from_spec("free-product(2,3)")


def test_sphere_counts_free(f2):
    assert sphere_counts(f2, 5) == [1, 4, 12, 36, 108, 324]


def test_sphere_counts_free_product(pz):
    assert sphere_counts(pz, 5) == [1, 3, 4, 6, 8, 12]


@pytest.mark.parametrize("shards", [1, 2, 3, 4, 8, 16])
def test_sphere_counts_independent_of_shards(f2, pz, shards):
    assert sphere_counts(f2, 7, shards) == sphere_counts(f2, 7)
    assert sphere_counts(pz, 9, shards) == sphere_counts(pz, 9)


@pytest.mark.parametrize("shards, size", [(1, 1), (3, 4), (4, 4), (5, 12)])
def test_shard_plan(f2, shards, size):
    plan = shard_plan(f2, 6, shards)
    assert len(plan) == size
    assert plan == sorted(plan)


def test_shard_plan_validation(f2):
    with pytest.raises(ValueError):
        shard_plan(f2, 3, 0)


def test_sphere_enumeration_matches_counts(f2, pz):
    for model in (f2, pz):
        counts = sphere_counts(model, 6)
        for n in range(7):
            words = list(sphere_words(model, n))
            assert len(words) == counts[n]
            assert len(set(words)) == len(words)
            assert all(len(w) == n for w in words)
            assert all(model.reduce_letters(w) == w for w in words)


def test_sphere_order_is_lexicographic(f2):
    words = list(sphere_words(f2, 4))
    assert words == sorted(words)


@pytest.mark.parametrize("shards", [1, 4, 9, 16])
def test_sharded_stream_identical(f2, shards):
    # 分片结果按计划顺序拼接，与串行逐字节一致
    assert list(sphere_words(f2, 5, shards)) == list(sphere_words(f2, 5))
    assert stream_digest(enumerate_sphere(f2, 5, shards)) == stream_digest(sphere_words(f2, 5))


def test_ball_and_annulus(f2):
    ball = list(enumerate_ball(f2, 3))
    assert len(ball) == 53
    assert ball[0].is_identity()
    assert [len(g) for g in ball] == sorted(len(g) for g in ball)
    assert sum(1 for _ in enumerate_annulus(f2, 2, 1)) == 52
    with pytest.raises(ValueError):
        list(enumerate_annulus(f2, 2, -1))


def test_negative_radius(f2):
    with pytest.raises(ValueError):
        list(sphere_words(f2, -1))
    with pytest.raises(ValueError):
        sphere_counts(f2, -1)


def test_budget_exceeded(f2):
    with pytest.raises(BudgetExceededError):
        list(sphere_words(f2, 3, budget=Budget(10)))
    with pytest.raises(BudgetExceededError):
        sphere_counts(f2, 8, budget=Budget(100))


@pytest.mark.parametrize("shards", [1, 4])
def test_classify_sphere(f2, shards):
    hits, total = classify_sphere(f2, 3, lambda w: w[0] == 0, shards)
    assert (hits, total) == (9, 36)


def test_build_census(f2):
    census = build_census(f2, 5, 1)
    assert census.radii == [0, 1, 2, 3, 4, 5]
    assert census.ball_counts == [1, 5, 17, 53, 161, 485]
    assert census.annulus_counts[0] == 5
    assert census.annulus_counts[2] == 52
    csv_text = census.to_csv()
    assert csv_text.splitlines()[0] == "n,sphere,ball,annulus"
    assert len(csv_text.splitlines()) == 7


def test_build_census_csv_rows(f2):
    # 半径到10的计数表：表头加11行
    census = build_census(f2, 10, 0)
    assert len(census.to_csv().splitlines()) == 12


def test_growth_exponent_free(f2):
    delta, fit = growth_exponent(build_census(f2, 10, 0))
    assert delta == pytest.approx(math.log(3), abs=1e-2)
    assert fit.radii == [5, 6, 7, 8, 9, 10]


def test_growth_exponent_free_product(pz):
    delta, _ = growth_exponent(build_census(pz, 24, 0))
    assert delta == pytest.approx(0.5 * math.log(2), abs=2e-2)


def test_growth_exponent_needs_radii(f2):
    with pytest.raises(ValueError, match="至少需要4个半径"):
        growth_exponent(build_census(f2, 2, 0))


def test_growth_exponent_linear_growth():
    # Z 的球面计数恒为 2，球线性增长
    z = GroupModel.from_spec("free(1)", allow_elementary=True)
    census = build_census(z, 12, 0)
    assert census.sphere_counts[1:] == [2] * 12
    delta, fit = growth_exponent(census)
    assert delta == 0
    assert fit.degenerate
    assert fit.radii == list(range(6, 13))
    assert "linear ball growth" in fit.notes[0]


def test_growth_exponent_flags_flat_fit():
    census = CensusTable("handmade", [0, 1, 2, 3], [1, 2, 3, 4], [5, 5, 4, 3], 0, [1, 2, 3, 4])
    delta, fit = growth_exponent(census)
    assert delta < 0
    assert fit.degenerate
    assert fit.notes == ["non-positive slope"]


def test_growth_exponent_free_product_radius_20(pz):
    delta, fit = growth_exponent(build_census(pz, 20, 0))
    assert delta == pytest.approx(0.5 * math.log(2), abs=1e-2)
    assert not fit.degenerate


def test_free_ball_sizes(f2):
    census = build_census(f2, 13, 0)
    assert census.ball_counts == [2 * 3 ** n - 1 for n in range(14)]


def test_free_product_sphere_sizes(pz):
    # 偶数半径 2^{k+1}，奇数半径 3·2^k
    expected = [1] + [2 ** (n // 2 + 1) if n % 2 == 0 else 3 * 2 ** (n // 2) for n in range(1, 21)]
    assert sphere_counts(pz, 20) == expected


def test_budget_checked_before_enumeration(f2):
    budget = Budget(30)
    predicate = MagicMock(return_value=True)
    with pytest.raises(BudgetExceededError, match="剩余预算"):
        classify_sphere(f2, 3, predicate, budget=budget)
    predicate.assert_not_called()
    assert budget.used == 0

    assert classify_sphere(f2, 2, predicate, budget=budget) == (12, 12)
    assert budget.used == 12


def test_budget_require():
    budget = Budget(10)
    budget.require(10)
    budget.charge(4)
    with pytest.raises(BudgetExceededError):
        budget.require(7)
    assert budget.used == 4
    assert budget.remaining == 6


def test_fit_log_linear_validation():
    with pytest.raises(ValueError):
        fit_log_linear([1], [2.0])
    with pytest.raises(ValueError):
        fit_log_linear([1, 2], [0.0, 1.0])
    fit = fit_log_linear([0, 1, 2], [1.0, math.e, math.e ** 2])
    assert fit.slope == pytest.approx(1.0)
    assert fit.stderr == pytest.approx(0.0, abs=1e-9)

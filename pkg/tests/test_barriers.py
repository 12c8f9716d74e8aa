import math
from fractions import Fraction

import pytest

from census.enumeration import ball_words
from geometry.axis import GeodesicPath
from geometry.barriers import (BarrierSpec, barrier_free_census, barrier_free_extents, brute_force_barrier,
                               find_barrier, fit_decay, fractional_barrier_census, fractional_coverage,
                               is_barrier_free_element)
from groups.models import DomainError, GroupModel


@pytest.fixture
def f2():
    return GroupModel.from_spec("free(2)")


@pytest.fixture
def ab(f2):
    return f2.parse("a b")


def path_of(model, text):
    return GeodesicPath.from_origin(model.parse(text))


def test_spec_validation(f2, ab):
    pz = GroupModel.from_spec("free-product(2,3)")
    with pytest.raises(ValueError):
        BarrierSpec(-1, ab)
    with pytest.raises(ValueError):
        BarrierSpec(0, ab, -1)
    with pytest.raises(DomainError):
        BarrierSpec(0, pz.parse("t"))
    assert BarrierSpec.default(ab).to_dict() == {"epsilon": 2, "f": "a b", "M": 0, "oriented": True}


def test_subword_barrier(f2, ab):
    spec = BarrierSpec(0, ab)
    assert str(find_barrier(path_of(f2, "b a b b"), spec)) == "b"
    assert find_barrier(path_of(f2, "b' a'"), spec) is None
    # 非定向时 f⁻¹ 也构成屏障
    unoriented = BarrierSpec(0, ab, oriented=False)
    assert find_barrier(path_of(f2, "b' a'"), unoriented) is not None


def test_model_mismatch(f2, ab):
    pz = GroupModel.from_spec("free-product(2,3)")
    with pytest.raises(ValueError):
        find_barrier(GeodesicPath.from_origin(pz.parse("s t")), BarrierSpec(0, ab))


@pytest.mark.parametrize("epsilon, oriented", [(0, True), (1, True), (1, False)])
def test_neighbourhood_scan_matches_brute_force(f2, ab, epsilon, oriented):
    spec = BarrierSpec(epsilon, ab, oriented=oriented)
    for w in ball_words(f2, 3):
        path = GeodesicPath(f2, b"", w)
        assert (find_barrier(path, spec) is not None) == brute_force_barrier(path, spec)


def test_proper_barrier(f2, ab):
    spec = BarrierSpec(0, ab)
    assert str(find_barrier(path_of(f2, "a a b b"), spec, proper=True)) == "a"
    # b·Ax(ab) 的轨道点 b、b a b 都在路径内部
    assert str(find_barrier(path_of(f2, "b a b b"), spec, proper=True)) == "b"
    # Ax(ab) 的轨道点 o 是路径起点
    assert find_barrier(path_of(f2, "a b b"), spec) is not None
    assert find_barrier(path_of(f2, "a b b"), spec, proper=True) is None
    # 屏障覆盖到端点时不是真屏障
    assert find_barrier(path_of(f2, "a b"), spec) is not None
    assert find_barrier(path_of(f2, "a b"), spec, proper=True) is None
    # 长度小于 2ε + |f| 的路径没有真屏障
    assert find_barrier(path_of(f2, "a b a"), BarrierSpec(1, ab), proper=True) is None


def test_barrier_free_census_free(f2, ab):
    census = barrier_free_census(f2, BarrierSpec(0, ab), 3)
    assert census.totals == [1, 4, 12, 36]
    assert census.fractions == [1, 1, Fraction(11, 12), Fraction(30, 36)]
    assert census.decay_rate is not None and census.decay_rate < 1


def test_barrier_free_census_unoriented(f2, ab):
    census = barrier_free_census(f2, BarrierSpec(0, ab, oriented=False), 2)
    assert census.fractions[2] == Fraction(10, 12)


@pytest.mark.parametrize("shards", [1, 4, 16])
def test_barrier_census_independent_of_shards(f2, ab, shards):
    spec = BarrierSpec(1, ab)
    assert barrier_free_census(f2, spec, 3, shards).satisfied == barrier_free_census(f2, spec, 3).satisfied


def test_endpoint_slack(f2, ab):
    # M = 1 时可以移动端点绕开屏障
    spec = BarrierSpec(0, ab, 1)
    assert is_barrier_free_element(f2, f2.parse("a b").word, spec)
    assert not is_barrier_free_element(f2, f2.parse("a b").word, BarrierSpec(0, ab))
    census = barrier_free_census(f2, spec, 2)
    assert census.fractions == [1, 1, 1]


def test_barrier_census_csv(f2, ab):
    census = barrier_free_census(f2, BarrierSpec(0, ab), 2)
    lines = census.to_csv().splitlines()
    assert lines[0] == "n,satisfied,total,fraction,fitted_rate"
    assert lines[3].startswith("2,11,12,")
    assert census.to_dict()["fractions"] == ["1", "1", "11/12"]


def test_barrier_census_validation(f2, ab):
    with pytest.raises(ValueError):
        barrier_free_census(f2, BarrierSpec(0, ab), -1)
    f3 = GroupModel.from_spec("free(3)")
    with pytest.raises(ValueError):
        barrier_free_census(f3, BarrierSpec(0, ab), 2)


def test_fit_decay():
    rate, radii = fit_decay([0, 1, 2, 3], [Fraction(1), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
    assert rate == pytest.approx(0.5)
    assert radii == [0, 1, 2, 3]
    rate, radii = fit_decay([0, 1, 2, 3], [Fraction(1), Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)], (2, 3))
    assert radii == [2, 3]
    assert fit_decay([0, 1], [Fraction(1), Fraction(0)]) == (None, [])


def test_barrier_free_extents(f2, ab):
    reach = barrier_free_extents(path_of(f2, "a a b b"), BarrierSpec(0, ab))
    assert reach == [2, 2, 4, 4, 4]
    reach = barrier_free_extents(path_of(f2, "b' a' b b"), BarrierSpec(0, ab, oriented=False))
    assert reach == [1, 4, 4, 4, 4]


@pytest.mark.parametrize("epsilon, oriented", [(0, True), (0, False), (1, True)])
def test_extents_match_subpath_scan(f2, ab, epsilon, oriented):
    f = ab if epsilon == 0 else f2.parse("a b b")
    spec = BarrierSpec(epsilon, f, oriented=oriented)
    for w in ball_words(f2, 4):
        path = GeodesicPath(f2, b"", w)
        expected = [max([i] + [j for j in range(i, path.length + 1)
                               if find_barrier(path.subpath(i, j), spec) is None])
                    for i in range(path.length + 1)]
        assert barrier_free_extents(path, spec) == expected


@pytest.mark.parametrize("word, interval_length, expected", [
    ("a a a a", 2, 4),
    ("a a b b", 2, 2),
    ("a a b b", 1, 3),
    ("a b", 2, 0),
    ("a b", 1, 1),
    ("a b a b", 3, 0),
    ("a b a b a b", 3, 0),
    ("a a a b b b", 3, 3),
    # 较短的末区间让前一区间保持长度 ≥ L
    ("a a b b b", 2, 4),
    ("a a a b b b b", 3, 6),
])
def test_fractional_coverage(f2, ab, word, interval_length, expected):
    assert fractional_coverage(path_of(f2, word), BarrierSpec(0, ab), interval_length) == expected


def best_disjoint_cover(path, spec, interval_length, start=0):
    best = 0
    for i in range(start, path.length + 1):
        for j in range(i + interval_length, path.length + 1):
            if find_barrier(path.subpath(i, j), spec) is None:
                best = max(best, j - i + best_disjoint_cover(path, spec, interval_length, j + 1))
    return best


@pytest.mark.parametrize("interval_length, oriented", [(1, True), (2, True), (2, False), (3, True)])
def test_fractional_coverage_matches_exhaustive_cover(f2, ab, interval_length, oriented):
    """与枚举全部顶点不相交区间族的结果一致"""
    spec = BarrierSpec(0, ab, oriented=oriented)
    for w in ball_words(f2, 5):
        path = GeodesicPath(f2, b"", w)
        assert fractional_coverage(path, spec, interval_length) == best_disjoint_cover(path, spec, interval_length)


@pytest.mark.parametrize("epsilon", [0, 1])
def test_full_fraction_reduces_to_barrier_free(f2, ab, epsilon):
    """θ = 1、L = 1 时与无屏障计数一致"""
    spec = BarrierSpec(epsilon, ab if epsilon == 0 else f2.parse("a b b"))
    radius = 4 if epsilon == 0 else 3
    census = fractional_barrier_census(f2, spec, Fraction(1), 1, radius)
    assert census.fractions == barrier_free_census(f2, spec, radius).fractions
    if epsilon == 0:
        assert census.fractions == [1, 1, Fraction(11, 12), Fraction(30, 36), Fraction(82, 108)]
    assert census.parameters["theta"] == "1"


def test_fractional_census(f2, ab):
    spec = BarrierSpec(0, ab)
    # L 大于 n 时没有可用区间，只有单位元满足
    census = fractional_barrier_census(f2, spec, Fraction(1, 2), 3, 2)
    assert census.fractions == [1, 0, 0]
    # n = 2 时需要一条长度 ≥ 1 的无屏障区间
    census = fractional_barrier_census(f2, spec, Fraction(1, 2), 1, 2)
    assert census.fractions == [1, 1, 1]


def test_fractional_census_half_theta_window(f2, ab):
    spec = BarrierSpec(0, ab)
    census = fractional_barrier_census(f2, spec, Fraction(1, 2), 3, 12, shards=4, fit_window=(6, 12))
    plain = barrier_free_census(f2, spec, 12, shards=4)
    assert census.fit_radii == list(range(6, 13))
    assert census.totals[12] == 4 * 3 ** 11
    # 无屏障元素的单个区间覆盖整条路径
    for n in range(6, 13):
        assert plain.fractions[n] <= census.fractions[n] <= 1
    assert census.fractions[12] > Fraction(1, 2)
    assert census.exponent_gap == pytest.approx(-math.log(census.decay_rate))
    assert census.to_dict()["exponent_gap"] == census.exponent_gap


def test_fractional_census_validation(f2, ab):
    spec = BarrierSpec(0, ab)
    with pytest.raises(ValueError):
        fractional_barrier_census(f2, spec, Fraction(0), 2, 3)
    with pytest.raises(ValueError):
        fractional_barrier_census(f2, spec, Fraction(3, 2), 2, 3)
    with pytest.raises(ValueError):
        fractional_barrier_census(f2, spec, Fraction(1, 2), 0, 3)

import pytest
from fractions import Fraction

from geometry.barriers import BarrierSpec
from geometry.drift import CLAUSES, drift_clauses, linear_drift_census
from groups.models import GroupModel

HALF = Fraction(1, 2)


@pytest.fixture
def f2():
    return GroupModel.from_spec("free(2)")


@pytest.fixture
def spec(f2):
    return BarrierSpec(0, f2.parse("a b"), oriented=False)


def test_clauses_cyclically_reduced(f2, spec):
    assert drift_clauses(f2.parse("a b"), 2, Fraction(0), Fraction(0), spec) == (True, True, True)
    # 轴上读到 b a b a，同样含有 a b
    assert drift_clauses(f2.parse("b a"), 2, Fraction(0), Fraction(0), spec) == (True, True, True)
    # f⁻¹ = b' a' 在非定向屏障下也算
    assert drift_clauses(f2.parse("a' b'"), 2, Fraction(0), Fraction(0), spec)[2]


def test_clauses_conjugated(f2, spec):
    assert drift_clauses(f2.parse("a b a'"), 3, HALF, HALF, spec) == (False, True, False)
    assert drift_clauses(f2.parse("a b a'"), 3, HALF, Fraction(0), spec)[1] is False


def test_clauses_degenerate(f2, spec):
    pz = GroupModel.from_spec("free-product(2,3)")
    pz_spec = BarrierSpec(0, pz.parse("s t"))
    assert drift_clauses(f2.identity(), 0, HALF, HALF, spec) == (False, False, False)
    assert drift_clauses(pz.parse("t s t'"), 3, HALF, HALF, pz_spec) == (False, False, False)


def test_drift_census(f2):
    census = linear_drift_census(f2, f2.parse("a b"), 1, HALF, HALF, 3)
    assert census.radii == [1, 2, 3]
    assert census.totals == [4, 12, 36]
    assert census.counts["stable_length"][:2] == [4, 12]
    assert census.counts["axis_distance"][:2] == [4, 12]
    assert census.counts["barrier"][:2] == [0, 4]
    assert census.counts["all"][:2] == [0, 4]
    assert census.fractions("all")[1] == Fraction(1, 3)
    assert census.parameters["theta1"] == "1/2"


@pytest.mark.parametrize("shards", [1, 4, 16])
def test_drift_census_independent_of_shards(f2, shards):
    serial = linear_drift_census(f2, f2.parse("a b"), 1, HALF, HALF, 4)
    sharded = linear_drift_census(f2, f2.parse("a b"), 1, HALF, HALF, 4, shards=shards)
    assert serial.counts == sharded.counts


def test_drift_csv(f2):
    census = linear_drift_census(f2, f2.parse("a b"), 1, HALF, HALF, 2)
    lines = census.to_csv().splitlines()
    assert lines[0] == "n,total," + ",".join(f"{c}_satisfied" for c in CLAUSES) + ",fraction,fitted_rate"
    assert len(lines) == 3
    assert set(census.to_dict()["fractions"]) == set(CLAUSES)


def test_drift_validation(f2):
    with pytest.raises(ValueError):
        linear_drift_census(f2, f2.parse("a b"), 1, Fraction(3, 2), HALF, 2)
    with pytest.raises(ValueError):
        linear_drift_census(f2, f2.parse("a b"), 0, HALF, HALF, 2)

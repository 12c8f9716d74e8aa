import pytest
from fractions import Fraction

from common.protocol import ProtocolError
from groups.elementary import elementary_subgroup
from groups.models import (DomainError, GroupModel, ModelMismatchError, are_commensurable, conjugacy_canonical,
                           cyclic_reduce, exact_root, geodesic_vertices, is_conjugate, primitive_root, smallest_period,
                           stable_length_estimate)


@pytest.fixture
def f2():
    return GroupModel.from_spec("free(2)")


@pytest.fixture
def pz():
    """Z/2 * Z/3"""
    return GroupModel.from_spec("free-product(2,3)")


# 模型参数验证
@pytest.mark.parametrize("spec, should_raise", [
    ("free(2)", False),
    ("free(3)", False),
    ("free(1)", True),
    ("free-product(2,3)", False),
    ("free-product(3,3,4)", False),
    ("free-product(2,2)", True),
    ("free-product(5)", True),
    ("free-product(1,3)", True),
    ("surface(2)", True),
])
def test_model_validation(spec, should_raise):
    if should_raise:
        with pytest.raises(ValueError):
            GroupModel.from_spec(spec)
    else:
        model = GroupModel.from_spec(spec)
        assert model.describe() == spec.replace(" ", "")


def test_letter_counts(f2, pz):
    assert f2.letter_count == 4
    assert pz.letter_count == 3
    assert [str(g) for g in pz.generators()] == ["s", "t", "t^2"]


def test_custom_alphabet():
    model = GroupModel.free(2, alphabet=["x", "y"])
    assert str(model.parse("x y'")) == "x y'"
    with pytest.raises(ValueError, match="字母表"):
        GroupModel.free(2, alphabet=["x", "x"])


def test_free_reduction(f2):
    g = f2.parse("a b b' a'")
    assert g.is_identity()
    assert str(g) == "e"
    assert f2.parse("e").is_identity()
    assert str(f2.parse("a b a'")) == "a b a'"


def test_free_product_reduction(pz):
    assert pz.parse("s s").is_identity()
    assert str(pz.parse("t t")) == "t^2"
    assert pz.parse("t t t").is_identity()
    assert str(pz.parse("t'")) == "t^2"
    assert str(pz.parse("s t s t^2 t^2")) == "s t s t"


def test_group_axioms(f2, pz):
    for model, text in ((f2, "a b' a a"), (pz, "s t s t^2")):
        g = model.parse(text)
        h = model.parse(text.split()[0])
        assert (g * g.inverse()).is_identity()
        assert (g * h) * g == g * (h * g)
        assert g ** -1 == g.inverse()
        assert g ** 0 == model.identity()
        assert g ** 3 == g * g * g


def test_parse_errors(f2):
    with pytest.raises(ProtocolError, match="未知字母"):
        f2.parse("a c")
    with pytest.raises(ProtocolError):
        f2.parse("a^2")
    with pytest.raises(ProtocolError):
        f2.parse("ab")


def test_model_mismatch(f2, pz):
    with pytest.raises(ModelMismatchError):
        f2.parse("a") * pz.parse("s")
    with pytest.raises(ModelMismatchError):
        is_conjugate(f2.parse("a"), pz.parse("s"))


def test_cyclic_reduce_free(f2):
    g = f2.parse("a b a'")
    core, conjugator = cyclic_reduce(g)
    assert str(core) == "b"
    assert str(conjugator) == "a"
    assert conjugator * core * conjugator.inverse() == g


def test_cyclic_reduce_free_product(pz):
    # t s t 的首尾同因子，核为 s t^2
    g = pz.parse("t s t")
    core, conjugator = cyclic_reduce(g)
    assert str(core) == "s t^2"
    assert conjugator * core * conjugator.inverse() == g


def test_torsion(pz, f2):
    g = pz.parse("t s t'")
    assert g.is_torsion()
    record = conjugacy_canonical(g)
    assert record.tau == 0
    assert record.pointed_length == 1
    assert record.is_torsion
    assert not f2.parse("a").is_torsion()
    with pytest.raises(DomainError):
        primitive_root(g)


def test_conjugacy_canonical(f2):
    record = conjugacy_canonical(f2.parse("b' b a b a b"))
    assert str(record.canonical_rep) == "a b a b"
    assert record.tau == 4
    assert record.exponent == 2
    assert str(record.root) == "a b"
    assert not record.is_primitive

    identity = conjugacy_canonical(f2.identity())
    assert identity.tau == 0 and identity.pointed_length == 0


def test_is_conjugate(f2):
    assert is_conjugate(f2.parse("a b"), f2.parse("b a"))
    assert is_conjugate(f2.parse("a b"), f2.parse("a' a b a"))
    assert not is_conjugate(f2.parse("a b"), f2.parse("a b'"))


def test_roots(f2):
    g = f2.parse("a b b a'")
    root, exponent = exact_root(g)
    assert exponent == 2
    assert root ** 2 == g
    assert primitive_root(f2.parse("a b a b a b")) == (f2.parse("a b"), 3)


def test_commensurable(f2):
    ab = f2.parse("a b")
    assert are_commensurable(ab, f2.parse("b a b a b a"))
    assert are_commensurable(ab, ab.inverse())
    assert not are_commensurable(ab, f2.parse("a"))


def test_stable_length_estimate(f2):
    g = f2.parse("a b a'")
    assert stable_length_estimate(g, 4) == Fraction(3, 2)
    assert stable_length_estimate(g, 1) == 3
    with pytest.raises(ValueError):
        stable_length_estimate(g, 0)


def test_smallest_period():
    assert smallest_period(bytes([0, 2, 0, 2])) == 2
    assert smallest_period(bytes([0, 0, 2])) == 3
    assert smallest_period(b"") == 0


def test_elementary_subgroup(f2):
    report = elementary_subgroup(f2.parse("a b a b"), 2)
    assert str(report.root_generator) == "a b"
    assert report.exponent == 2
    assert [str(k) for k in report.kernel_elements] == ["e"]
    assert report.orientation_index == 1
    assert not report.strongly_primitive
    assert elementary_subgroup(f2.parse("a b"), 2).strongly_primitive


def test_elementary_subgroup_errors(f2, pz):
    with pytest.raises(DomainError):
        elementary_subgroup(pz.parse("s"), 2)
    with pytest.raises(ValueError):
        elementary_subgroup(f2.parse("a"), 0)


@pytest.mark.parametrize("model_name, text, expected", [
    ("f2", "a b a'", ["e", "a", "a b", "a b a'"]),
    ("pz", "s t^2", ["e", "s", "s t^2"]),
    ("pz", "t s t", ["e", "t", "t s", "t s t"]),
    ("f2", "e", ["e"]),
])
def test_geodesic_vertices(model_name, text, expected, request):
    model = request.getfixturevalue(model_name)
    vertices = geodesic_vertices(model.parse(text))
    assert [str(v) for v in vertices] == expected
    for u, v in zip(vertices, vertices[1:]):
        assert (u.inverse() * v).length == 1

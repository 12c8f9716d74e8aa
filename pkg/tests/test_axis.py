import pytest

from geometry.axis import (AxisSet, GeodesicPath, InsufficientRadiusError, distance_to_axis, path_projection_diameter,
                           project, projection_diameter, set_diameter, translation_axis, word_distance)
from groups.models import DomainError, GroupModel


@pytest.fixture
def f2():
    return GroupModel.from_spec("free(2)")


@pytest.fixture
def pz():
    return GroupModel.from_spec("free-product(2,3)")


def words(model, *texts):
    return [model.parse(t).word for t in texts]


@pytest.mark.parametrize("x, y, expected", [
    ("e", "e", 0),
    ("a b", "a b'", 2),
    ("a", "a b a", 2),
    ("b", "a", 2),
])
def test_word_distance_free(f2, x, y, expected):
    assert word_distance(f2, f2.parse(x).word, f2.parse(y).word) == expected


def test_word_distance_free_product(pz):
    # 分叉处同因子的两个字母合并为一个
    assert word_distance(pz, pz.parse("t").word, pz.parse("t^2").word) == 1
    assert word_distance(pz, pz.parse("t s").word, pz.parse("t^2").word) == 2
    assert word_distance(pz, pz.parse("s").word, pz.parse("t").word) == 2


def test_geodesic_path(f2):
    path = GeodesicPath.between(f2.parse("a"), f2.parse("a b b"))
    assert path.length == 2
    assert [str(v) for v in path.vertices()] == ["a", "a b", "a b b"]
    assert path.end == f2.parse("a b b").word
    assert path.is_geodesic()
    assert path.subpath(1, 2).vertex_words() == words(f2, "a b", "a b b")
    assert path.translate(f2.parse("a'").word).vertex_words() == words(f2, "e", "b", "b b")
    assert path.distance_to(f2.parse("a b a").word) == 1
    assert not GeodesicPath(f2, b"", bytes([0, 1])).is_geodesic()


def test_translation_axis(f2):
    path = translation_axis(f2.parse("a b a'"))
    assert [str(v) for v in path.vertices()] == ["a b'", "a", "a b"]
    assert distance_to_axis(f2.parse("a b a'")) == 1
    assert distance_to_axis(f2.parse("a b")) == 0
    with pytest.raises(DomainError):
        translation_axis(f2.identity())


def test_axis_membership(f2):
    # 自由群中 Ax(ab) = ⟨ab⟩·o
    axis = AxisSet(f2.parse("a b"))
    for text in ("e", "a b", "a b a b", "b' a'", "b' a' b' a'"):
        assert axis.contains(f2.parse(text))
    for text in ("a", "a b a", "b'", "b", "a'", "a a", "a b b"):
        assert not axis.contains(f2.parse(text))
    assert all(len(w) % 2 == 0 for w in axis.point_words())


def test_axis_hull(f2):
    axis = AxisSet(f2.parse("a b"))
    for text in ("a", "a b a", "b'"):
        assert axis.hull_contains_word(f2.parse(text).word)
    assert not axis.hull_contains_word(f2.parse("b").word)
    assert set(axis.point_words()) < set(axis.hull_words())


def test_axis_widens_on_demand(f2):
    axis = AxisSet(f2.parse("a b"), radius=2)
    assert axis.contains(f2.parse("a b a b a b"))
    assert axis.radius >= 6


def test_projection(f2):
    axis = AxisSet(f2.parse("a b"))
    nearest = project(f2.parse("b"), axis)
    assert [str(p) for p in nearest.points] == ["e"]
    assert nearest.distance == 1
    # a 是凸包上的中点，到两侧轨道点等距
    nearest = axis.project(f2.parse("a a b"))
    assert [str(p) for p in nearest.points] == ["e", "a b"]
    assert nearest.distance == 3
    assert axis.project_word(f2.parse("a a b").word, hull=True) == ([f2.parse("a").word], 2)
    assert axis.distance_to_word(f2.parse("a b a b").word) == 0
    assert axis.distance_to_word(f2.parse("a").word) == 1
    assert axis.distance_to_word(f2.parse("a").word, hull=True) == 0


def test_projection_onto_generator_axis(f2):
    axis = AxisSet(f2.parse("a"))
    nearest = axis.project(f2.parse("b a a"))
    assert [str(p) for p in nearest.points] == ["e"]
    assert nearest.distance == 3
    nearest = axis.project(f2.parse("a a a b"))
    assert [str(p) for p in nearest.points] == ["a a a"]
    assert nearest.distance == 1


def test_projection_insufficient_radius(f2):
    axis = AxisSet(f2.parse("a b"), radius=2)
    with pytest.raises(InsufficientRadiusError):
        axis.project_word(f2.parse("b b b b").word)
    assert axis.project_word(f2.parse("b b b b").word, auto_widen=True)[1] == 4


def test_projection_diameter(f2):
    axis = AxisSet(f2.parse("a b"))
    path = GeodesicPath.from_origin(f2.parse("a b a b"))
    assert path_projection_diameter(path, axis) == 4
    # 离开轴的测地线投影为一个点
    away = GeodesicPath.from_origin(f2.parse("b a a"))
    assert path_projection_diameter(away, axis) == 0
    assert projection_diameter([f2.parse("b"), f2.parse("a a")], axis) == 2
    assert projection_diameter([f2.parse("a"), f2.parse("a a a a a")], AxisSet(f2.parse("a"))) == 4


def test_set_diameter(f2):
    assert set_diameter(f2, words(f2, "e", "a b", "b'")) == 3
    assert set_diameter(f2, []) == 0


def test_axis_cosets(f2):
    f = f2.parse("a b")
    axis = AxisSet(f)
    assert axis.same_coset(axis.translated(f2.parse("a b a b")))
    assert axis == AxisSet(f2.parse("a b a b"))
    assert axis != axis.translated(f2.parse("b"))
    assert hash(axis) == hash(AxisSet(f, translate=f2.parse("b' a'")))
    assert str(axis.translated(f2.parse("b")).t) == "b"


def test_translated_axis_points(f2):
    moved = AxisSet(f2.parse("a b")).translated(f2.parse("b"))
    assert moved.contains(f2.parse("b"))
    assert moved.contains(f2.parse("b a b"))
    assert moved.contains(f2.parse("a'"))
    assert not moved.contains(f2.parse("b a"))
    assert moved.hull_contains_word(f2.parse("b a").word)
    assert not moved.contains(f2.parse("a"))


def test_axis_free_product(pz):
    axis = AxisSet(pz.parse("s t"))
    assert axis.contains(pz.identity())
    assert axis.contains(pz.parse("s t s t"))
    assert axis.contains(pz.parse("t^2 s"))
    assert not axis.contains(pz.parse("s"))
    assert axis.hull_contains_word(pz.parse("s").word)
    assert axis.tau == 2
    assert pz.identity().word in axis.coset_reps


def test_axis_domain(pz, f2):
    with pytest.raises(DomainError):
        AxisSet(pz.parse("s"))
    with pytest.raises(DomainError):
        AxisSet(f2.identity())

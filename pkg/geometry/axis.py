"""
轴集合、测地路径与最近点投影

Ax(f) 为轨道 E(f)·o = {r^k·q·o}，r 为 f 的精确根，q 取遍 E(f)/⟨r⟩ 的代表；
自由群中即 ⟨r⟩·o。其测地凸包 E(f)·[o, r·o] 单独保存，供可容许路径校验使用。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from groups.models import DomainError, Element, GroupModel, exact_root

logger = logging.getLogger(__name__)


class InsufficientRadiusError(RuntimeError):
    """轴集合的物化半径不足以给出精确投影"""
    pass


def word_distance(model: GroupModel, x: bytes, y: bytes) -> int:
    """d(x·o, y·o) = |x⁻¹ y|"""
    i = 0
    limit = min(len(x), len(y))
    while i < limit and x[i] == y[i]:
        i += 1
    if model.is_free or i == len(x) or i == len(y):
        return len(x) + len(y) - 2 * i
    # 自由积中分叉处两字母同因子时合并为一个字母
    if model.factor_of[x[i]] == model.factor_of[y[i]]:
        return len(x) + len(y) - 2 * i - 1
    return len(x) + len(y) - 2 * i


@dataclass(frozen=True)
class GeodesicPath:
    """
    顶点路径 start, start·l_1, start·l_1 l_2, ...

    letters 为 start⁻¹·end 的规范形，模型中测地线唯一，因此该路径即 [start, end]。
    """
    model: GroupModel
    start: bytes
    letters: bytes

    @classmethod
    def between(cls, x: Element, y: Element) -> "GeodesicPath":
        model = x.model
        return cls(model, x.word, model.mul_words(model.inv_word(x.word), y.word))

    @classmethod
    def from_origin(cls, g: Element) -> "GeodesicPath":
        return cls(g.model, b"", g.word)

    @property
    def length(self) -> int:
        return len(self.letters)

    def vertex_words(self) -> List[bytes]:
        model = self.model
        return [model.mul_words(self.start, self.letters[:i]) for i in range(len(self.letters) + 1)]

    def vertices(self) -> List[Element]:
        return [Element(self.model, w) for w in self.vertex_words()]

    @property
    def end(self) -> bytes:
        return self.model.mul_words(self.start, self.letters)

    def translate(self, g: bytes) -> "GeodesicPath":
        """左乘保持边标号"""
        return GeodesicPath(self.model, self.model.mul_words(g, self.start), self.letters)

    def subpath(self, i: int, j: int) -> "GeodesicPath":
        model = self.model
        return GeodesicPath(model, model.mul_words(self.start, self.letters[:i]), self.letters[i:j])

    def is_geodesic(self) -> bool:
        """letters 为规范形(相邻字母不相互作用)即为测地线"""
        model = self.model
        return all(not model.interacts(self.letters[i], self.letters[i + 1])
                   for i in range(len(self.letters) - 1))

    def distance_to(self, x: bytes) -> int:
        return min(word_distance(self.model, v, x) for v in self.vertex_words())


@dataclass
class Projection:
    """最近点集合与距离"""
    points: List[Element]
    distance: int


class AxisSet:
    """
    t·Ax(f) = t·E(f)·o，按需物化到给定半径

    投影与距离默认相对轨道点；hull=True 时相对凸包 t·E(f)·[o, r·o]。
    """

    def __init__(self, f: Element, translate: Optional[Element] = None,
                 radius: Optional[int] = None, kernel_search_radius: Optional[int] = None):
        """
        初始化轴集合

        Args:
            f: 非挠元素
            translate: 平移 t，默认为单位元
            radius: 初始物化半径，默认 |t| + |f| + 4
            kernel_search_radius: 自由积模型中搜索 E(f) 陪集代表的半径

        Raises:
            DomainError: f 为单位元或挠元素
        """
        if f.is_identity() or f.is_torsion():
            raise DomainError(f"{f} 不是非挠元素，不能生成轴")
        model = f.model
        self.model = model
        self.f = f
        self.t = translate if translate is not None else model.identity()
        if self.t.model != model:
            raise ValueError("平移元素必须属于同一模型")

        self.root, self.exponent = exact_root(f)
        core, _ = model.cyclic_reduce_word(self.root.word)
        self.tau = len(core)
        self.coset_reps = self._coset_representatives(kernel_search_radius)
        self._prefixes = [self.root.word[:i] for i in range(len(self.root.word))]
        self._key: Optional[Tuple[int, bytes]] = None

        self.radius = -1
        self._points: Set[bytes] = set()
        self._hull: Set[bytes] = set()
        self.materialize(radius if radius is not None else len(self.t) + len(f) + 4)

    def _coset_representatives(self, search_radius: Optional[int]) -> List[bytes]:
        """E(f)/⟨r⟩ 的代表：自由群中平凡；自由积中由有界搜索得到核与翻转元"""
        if self.model.is_free:
            return [b""]
        from groups.elementary import elementary_subgroup

        radius = search_radius if search_radius is not None else min(len(self.root) + 2, 6)
        report = elementary_subgroup(self.root, max(1, radius))
        reps = [k.word for k in report.kernel_elements]
        if report.flip_element is not None:
            flip = report.flip_element.word
            reps += [self.model.mul_words(flip, k) for k in list(reps)]
        return sorted(set(reps), key=lambda w: (len(w), w))

    # ------------------------------------------------------------------
    def materialize(self, radius: int):
        """物化 |p| ≤ radius 的全部点"""
        if radius <= self.radius:
            return
        model = self.model
        r = self.root.word
        q_max = max(len(q) for q in self.coset_reps)
        bound = (radius + len(self.t) + q_max + len(r)) // max(self.tau, 1) + 1
        points: Set[bytes] = set()
        hull: Set[bytes] = set()
        power = model.pow_word(r, -bound)
        for _ in range(-bound, bound + 1):
            base = model.mul_words(self.t.word, power)
            for q in self.coset_reps:
                bq = model.mul_words(base, q)
                if len(bq) <= radius:
                    points.add(bq)
                for p in self._prefixes:
                    point = model.mul_words(bq, p)
                    if len(point) <= radius:
                        hull.add(point)
            power = model.mul_words(power, r)
        self._points = points
        self._hull = hull
        self.radius = radius
        logger.debug(f"轴 {self} 物化到半径 {radius}: {len(points)} 个轨道点, 凸包 {len(hull)} 个点")

    def point_words(self) -> List[bytes]:
        return sorted(self._points, key=lambda w: (len(w), w))

    def points(self) -> List[Element]:
        return [Element(self.model, w) for w in self.point_words()]

    def contains_word(self, x: bytes) -> bool:
        if len(x) > self.radius:
            self.materialize(len(x))
        return x in self._points

    def contains(self, x: Element) -> bool:
        return self.contains_word(x.word)

    def hull_words(self) -> List[bytes]:
        return sorted(self._hull, key=lambda w: (len(w), w))

    def hull_contains_word(self, x: bytes) -> bool:
        """x 在凸包 t·E(f)·[o, r·o] 上"""
        if len(x) > self.radius:
            self.materialize(len(x))
        return x in self._hull

    # ------------------------------------------------------------------
    def project_word(self, x: bytes, auto_widen: bool = False, hull: bool = False) -> Tuple[List[bytes], int]:
        """
        最近点投影

        Args:
            x: 待投影的点
            auto_widen: 半径不足时自动扩展
            hull: 投影到凸包而不是轨道

        Raises:
            InsufficientRadiusError: 物化半径小于 |x| + d(x, X) 且不允许自动扩展
        """
        model = self.model
        while True:
            best = None
            nearest: List[bytes] = []
            for p in (self._hull if hull else self._points):
                d = word_distance(model, p, x)
                if best is None or d < best:
                    best, nearest = d, [p]
                elif d == best:
                    nearest.append(p)
            if best is not None and len(x) + best <= self.radius:
                nearest.sort(key=lambda w: (len(w), w))
                return nearest, best
            needed = len(x) + (best if best is not None else len(self.t) + len(self.root))
            if not auto_widen:
                raise InsufficientRadiusError(
                    f"轴物化半径 {self.radius} 不足，需要至少 {needed}")
            self.materialize(max(needed, self.radius + 1))

    def project(self, x: Element, auto_widen: bool = False) -> Projection:
        points, distance = self.project_word(x.word, auto_widen=auto_widen)
        return Projection([Element(self.model, p) for p in points], distance)

    def distance_to_word(self, x: bytes, hull: bool = False) -> int:
        return self.project_word(x, auto_widen=True, hull=hull)[1]

    # ------------------------------------------------------------------
    def translated(self, g: Element) -> "AxisSet":
        """g·X；E(f) 陪集代表不变，无需重新搜索"""
        clone = AxisSet.__new__(AxisSet)
        clone.model = self.model
        clone.f = self.f
        clone.t = g * self.t
        clone.root, clone.exponent, clone.tau = self.root, self.exponent, self.tau
        clone.coset_reps = self.coset_reps
        clone._prefixes = self._prefixes
        clone._key = None
        clone.radius = -1
        clone._points = set()
        clone._hull = set()
        clone.materialize(len(clone.t) + len(self.f) + 4)
        return clone

    @property
    def key(self) -> Tuple[bytes, Tuple[int, bytes]]:
        """
        陪集 t·E(f) 的规范键：t·r^k·q 在有限范围内的短字典序最小元，连同根一起
        """
        if self._key is None:
            model = self.model
            r = self.root.word
            q_max = max(len(q) for q in self.coset_reps)
            bound = (2 * len(self.t) + len(r) + q_max) // max(self.tau, 1) + 1
            best = None
            power = model.pow_word(r, -bound)
            for _ in range(-bound, bound + 1):
                base = model.mul_words(self.t.word, power)
                for q in self.coset_reps:
                    candidate = model.mul_words(base, q)
                    item = (len(candidate), candidate)
                    if best is None or item < best:
                        best = item
                power = model.mul_words(power, r)
            self._key = best
        return (self.root.word, self._key)

    def same_coset(self, other: "AxisSet") -> bool:
        return self.key == other.key

    def __eq__(self, other) -> bool:
        return isinstance(other, AxisSet) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        label = str(self.t)
        return f"AxisSet({label}·Ax({self.root}))"

    def to_dict(self) -> Dict:
        return {"f": str(self.f), "root": str(self.root), "translate": str(self.t),
                "representative": self.model.format_word(self.key[1][1]), "radius": self.radius}


def project(x: Element, axis: AxisSet) -> Projection:
    """π_X(x) 及 d(x, X)；半径不足时抛出 InsufficientRadiusError"""
    return axis.project(x)


def projection_diameter(points: Iterable[Element], axis: AxisSet, auto_widen: bool = True) -> int:
    """d_X(A) = diam π_X(A)"""
    model = axis.model
    image: Set[bytes] = set()
    for x in points:
        nearest, _ = axis.project_word(x.word if isinstance(x, Element) else x, auto_widen=auto_widen)
        image.update(nearest)
    return set_diameter(model, image)


def set_diameter(model: GroupModel, words: Iterable[bytes]) -> int:
    items = list(words)
    best = 0
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            d = word_distance(model, items[i], items[j])
            if d > best:
                best = d
    return best


def path_projection_diameter(path: GeodesicPath, axis: AxisSet) -> int:
    return projection_diameter(path.vertex_words(), axis)


def translation_axis(g: Element, periods: int = 1) -> GeodesicPath:
    """
    g 的平移轴上一段: 从 c·u^{-periods} 到 c·u^{periods}，其中 g = c·u·c⁻¹ 且 u 循环约化

    Raises:
        DomainError: 单位元或挠元素
    """
    if g.is_identity() or g.is_torsion():
        raise DomainError(f"{g} 没有平移轴")
    model = g.model
    core, conjugator = model.cyclic_reduce_word(g.word)
    start = model.mul_words(conjugator, model.pow_word(core, -periods))
    letters = core * (2 * periods)
    return GeodesicPath(model, start, letters)


def distance_to_axis(g: Element) -> int:
    """d(o, 轴)：一个周期内轴顶点长度的最小值"""
    path = translation_axis(g, periods=1)
    return min(len(v) for v in path.vertex_words())

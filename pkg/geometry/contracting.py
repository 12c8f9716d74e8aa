"""
收缩性质的经验审计

收缩常数、有界交、稳定轴长度、点长度与稳定长度之差、投影三角不等式与拟凸性。
所有审计都在有限半径内穷举(或按种子抽样)，给出的是测得值而不是证明。
"""

import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from common.budget import Budget
from census.enumeration import ball_words
from geometry.axis import (AxisSet, GeodesicPath, set_diameter, translation_axis, word_distance)
from groups.models import DomainError, Element, GroupModel, conjugacy_canonical

logger = logging.getLogger(__name__)

# 穷举点对数超过此值时改为抽样
MAX_EXHAUSTIVE_PAIRS = 20000


def _pairs(points: List[bytes], samples: Optional[int], seed: int) -> List[Tuple[bytes, bytes]]:
    """全部无序点对，或按种子抽取的 samples 对"""
    total = len(points) * (len(points) - 1) // 2
    limit = samples if samples is not None else MAX_EXHAUSTIVE_PAIRS
    if total <= limit:
        return [(points[i], points[j]) for i in range(len(points)) for j in range(i + 1, len(points))]
    rng = random.Random(seed)
    pairs = []
    for _ in range(limit):
        x, y = rng.sample(points, 2)
        pairs.append((x, y))
    return pairs


@dataclass
class ContractionAudit:
    """收缩审计：C_emp 为使"与 X 距离 > C 的测地线投影直径 ≤ C"成立的最小 C"""
    axis: str
    sample_radius: int
    pairs_checked: int
    exhaustive: bool
    constant: int
    worst_diameter_by_distance: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "axis": self.axis,
            "sample_radius": self.sample_radius,
            "pairs_checked": self.pairs_checked,
            "exhaustive": self.exhaustive,
            "C_emp": self.constant,
            "worst_diameter_by_distance": {str(k): v for k, v in sorted(self.worst_diameter_by_distance.items())},
        }


def least_consistent_constant(worst: Dict[int, int]) -> int:
    """
    最小的 C 使得对所有 d > C 有 worst[d] ≤ C

    Args:
        worst: 测地线到 X 的距离 d ↦ 该距离下的最大投影直径
    """
    c = 0
    while True:
        if all(diameter <= c for d, diameter in worst.items() if d > c):
            return c
        c += 1


def contraction_audit(axis: AxisSet, model: GroupModel, sample_radius: int,
                      samples: Optional[int] = None, seed: int = 0,
                      budget: Optional[Budget] = None) -> ContractionAudit:
    """
    遍历端点在 N(o, sample_radius) 中的测地线 [x, y]，记录其到 X 的距离与投影直径

    Raises:
        BudgetExceededError: 超出预算
    """
    if sample_radius < 0:
        raise ValueError("采样半径必须非负")
    if axis.model != model:
        raise ValueError("轴属于其他模型")

    points = list(ball_words(model, sample_radius, budget=budget))
    pairs = _pairs(points, samples, seed)
    exhaustive = len(pairs) == len(points) * (len(points) - 1) // 2
    axis.materialize(2 * sample_radius + len(axis.t) + len(axis.root) + 2)

    worst: Dict[int, int] = {}
    for x, y in pairs:
        if budget is not None:
            budget.charge(1)
        path = GeodesicPath(model, x, model.mul_words(model.inv_word(x), y))
        image = set()
        distance = None
        for v in path.vertex_words():
            nearest, d = axis.project_word(v, auto_widen=True)
            image.update(nearest)
            distance = d if distance is None else min(distance, d)
        diameter = set_diameter(model, image)
        if diameter > worst.get(distance, -1):
            worst[distance] = diameter

    constant = least_consistent_constant(worst)
    logger.info(f"收缩审计 {axis}: 半径 {sample_radius}, {len(pairs)} 条测地线, C_emp={constant}")
    return ContractionAudit(repr(axis), sample_radius, len(pairs), exhaustive, constant, worst)


@dataclass
class BoundedIntersectionAudit:
    f: str
    sample_radius: int
    translates: int
    pairs_checked: int
    bound: int

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def distinct_translates(f: Element, radius: int, budget: Optional[Budget] = None) -> List[AxisSet]:
    """t ∈ N(o, radius) 的平移 t·Ax(f)，按陪集 t·E(f) 去重"""
    model = f.model
    base = AxisSet(f)
    seen: Dict = {}
    for t in ball_words(model, radius, budget=budget):
        axis = base.translated(Element(model, t))
        seen.setdefault(axis.key, axis)
    return [seen[k] for k in sorted(seen, key=lambda key: key[1])]


def bounded_intersection_audit(f: Element, model: GroupModel, sample_radius: int,
                               budget: Optional[Budget] = None) -> BoundedIntersectionAudit:
    """不同平移 X ≠ X' 之间 diam π_{X'}(X) 的最大值 B"""
    if f.model != model:
        raise ValueError("元素属于其他模型")
    axes = distinct_translates(f, sample_radius, budget)
    reach = 2 * sample_radius + 2 * len(f) + 2
    for axis in axes:
        axis.materialize(reach)

    bound = 0
    pairs = 0
    for i, source in enumerate(axes):
        words = [w for w in source.point_words() if len(w) <= reach]
        for j, target in enumerate(axes):
            if i == j:
                continue
            pairs += 1
            image = set()
            for w in words:
                nearest, _ = target.project_word(w, auto_widen=True)
                image.update(nearest)
            bound = max(bound, set_diameter(model, image))

    logger.info(f"有界交审计 f={f}: {len(axes)} 个平移, B={bound}")
    return BoundedIntersectionAudit(str(f), sample_radius, len(axes), pairs, bound)


@dataclass
class StableAxisAudit:
    g: str
    tau: int
    r: int
    max_deviation: int
    samples: int
    violations: List[str] = field(default_factory=list)

    @property
    def within_bound(self) -> bool:
        return self.max_deviation <= 2 * self.r

    def to_dict(self) -> Dict:
        return {"g": self.g, "tau": self.tau, "R": self.r, "max_deviation": self.max_deviation,
                "bound": 2 * self.r, "within_bound": self.within_bound,
                "samples": self.samples, "violations": self.violations}


def stable_axis_audit(g: Element, r: int, points: Optional[Sequence[Element]] = None,
                      periods: int = 2) -> StableAxisAudit:
    """
    轴轨道上 max |τ[g] − d(x, g·x)|；d(x, g·x) < 3R 的样本点记为前提违例，不计入偏差

    Args:
        g: 非挠元素
        r: 常数 R
        points: 样本点，默认取平移轴上 2·periods 个周期的顶点
    """
    if r < 0:
        raise ValueError("R 必须非负")
    if g.is_identity() or g.is_torsion():
        raise DomainError(f"{g} 不是非挠元素")
    model = g.model
    tau = conjugacy_canonical(g).tau
    words = [p.word for p in points] if points is not None else translation_axis(g, periods).vertex_words()

    deviation = 0
    violations = []
    for x in words:
        displacement = word_distance(model, x, model.mul_words(g.word, x))
        if displacement < 3 * r:
            violations.append(model.format_word(x))
            continue
        deviation = max(deviation, abs(tau - displacement))
    return StableAxisAudit(str(g), tau, r, deviation, len(words), violations)


@dataclass
class StablePointedAudit:
    """B = max(ℓ_o[g] − τ[g])；ℓ_o 由球内最短类成员测得，τ 由 |g³| − |g²| 测得"""
    model: str
    max_radius: int
    classes: int
    max_gap: int
    gap_histogram: Dict[int, int]

    def to_dict(self) -> Dict:
        return {"model": self.model, "max_radius": self.max_radius, "classes": self.classes,
                "B": self.max_gap, "gap_histogram": {str(k): v for k, v in self.gap_histogram.items()}}


def stable_pointed_audit(model: GroupModel, max_radius: int,
                         budget: Optional[Budget] = None) -> StablePointedAudit:
    """
    对球内全部非挠类测量点长度与稳定长度之差
    """
    shortest: Dict[bytes, Tuple[int, bytes]] = {}
    for w in ball_words(model, max_radius, budget=budget):
        if not w or model.is_torsion_word(w):
            continue
        rep = conjugacy_canonical(Element(model, w)).canonical_rep.word
        if rep not in shortest or len(w) < shortest[rep][0]:
            shortest[rep] = (len(w), w)

    histogram: Dict[int, int] = {}
    for length, w in shortest.values():
        # 双曲元素满足 |g^{k+1}| − |g^k| = τ (k ≥ 1)
        tau = len(model.pow_word(w, 3)) - len(model.pow_word(w, 2))
        gap = length - tau
        histogram[gap] = histogram.get(gap, 0) + 1

    max_gap = max(histogram) if histogram else 0
    logger.info(f"点长度-稳定长度审计 {model.describe()}: {len(shortest)} 个类, B={max_gap}")
    return StablePointedAudit(model.describe(), max_radius, len(shortest), max_gap, dict(sorted(histogram.items())))


@dataclass
class TriangleAudit:
    samples: int
    violations: int
    max_excess: int

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def projection_triangle_audit(axis: AxisSet, samples: int = 100, seed: int = 0,
                              radius: int = 4, set_size: int = 3) -> TriangleAudit:
    """随机三元组 (A, B, C) 上检查 d_X(A, C) ≤ d_X(A, B) + d_X(B, C)"""
    model = axis.model
    rng = random.Random(seed)
    points = list(ball_words(model, radius))
    image_cache: Dict[bytes, List[bytes]] = {}

    def image(words: List[bytes]) -> set:
        result = set()
        for w in words:
            if w not in image_cache:
                image_cache[w] = axis.project_word(w, auto_widen=True)[0]
            result.update(image_cache[w])
        return result

    violations = 0
    max_excess = 0
    for _ in range(samples):
        a, b, c = ([rng.choice(points) for _ in range(set_size)] for _ in range(3))
        d_ac = set_diameter(model, image(a + c))
        d_ab = set_diameter(model, image(a + b))
        d_bc = set_diameter(model, image(b + c))
        excess = d_ac - d_ab - d_bc
        if excess > 0:
            violations += 1
            max_excess = max(max_excess, excess)
    return TriangleAudit(samples, violations, max_excess)


def quasi_convexity_audit(axis: AxisSet, radius: int) -> int:
    """端点都在 X ∩ N(o, radius) 中的测地线到 X 的最大距离 σ"""
    model = axis.model
    axis.materialize(radius)
    anchors = [w for w in axis.point_words() if len(w) <= radius]
    sigma = 0
    for i in range(len(anchors)):
        for j in range(i + 1, len(anchors)):
            x, y = anchors[i], anchors[j]
            path = GeodesicPath(model, x, model.mul_words(model.inv_word(x), y))
            for v in path.vertex_words():
                sigma = max(sigma, axis.distance_to_word(v))
    logger.debug(f"拟凸性审计 {axis}: 半径 {radius}, σ={sigma}")
    return sigma

"""
(ε, f)-屏障搜索与无屏障元素计数

模型中测地线唯一，"存在一条无屏障测地线"与"[x, y] 无屏障"等价。
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Deque, Dict, List, Optional, Sequence, Tuple

from common.budget import Budget
from common.constants import DEFAULT_EPSILON, DEFAULT_M
from common.protocol import ReportProtocol
from census.enumeration import ball_words, classify_sphere, fit_log_linear
from geometry.axis import AxisSet, GeodesicPath, word_distance
from groups.models import DomainError, Element, GroupModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BarrierSpec:
    """
    屏障参数：ε、屏障元素 f、端点松弛 M

    oriented 为真时要求沿 γ 的方向 t·o 的近点不晚于 t·f·o 的近点。
    """
    epsilon: int
    f: Element
    m: int = DEFAULT_M
    oriented: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("ε 必须非负")
        if self.m < 0:
            raise ValueError("M 必须非负")
        if self.f.is_identity() or self.f.is_torsion():
            raise DomainError(f"屏障元素 {self.f} 必须是非挠元素")

    @classmethod
    def default(cls, f: Element) -> "BarrierSpec":
        return cls(DEFAULT_EPSILON, f, DEFAULT_M)

    def to_dict(self) -> Dict:
        return {"epsilon": self.epsilon, "f": str(self.f), "M": self.m, "oriented": self.oriented}


def _subword_barrier(path: GeodesicPath, f: bytes, oriented: bool) -> Optional[bytes]:
    """ε = 0：t·o, t·f·o 都是顶点，当且仅当 f(非定向时也包括 f⁻¹)是路径标号的子字"""
    model = path.model
    letters = path.letters
    k = len(f)
    if k == 0 or k > len(letters):
        return None
    f_inv = model.inv_word(f)
    for i in range(len(letters) - k + 1):
        window = letters[i:i + k]
        if window == f:
            return model.mul_words(path.start, letters[:i])
        if not oriented and window == f_inv:
            return model.mul_words(path.start, letters[:i + k])
    return None


def _near(model: GroupModel, vertices: Sequence[bytes], x: bytes, epsilon: int) -> List[int]:
    """与 x 距离 ≤ ε 的顶点下标"""
    return [i for i, v in enumerate(vertices) if word_distance(model, v, x) <= epsilon]


def _is_barrier(model: GroupModel, vertices: Sequence[bytes], t: bytes, f: bytes,
                epsilon: int, oriented: bool) -> bool:
    entry = _near(model, vertices, t, epsilon)
    if not entry:
        return False
    exit_ = _near(model, vertices, model.mul_words(t, f), epsilon)
    if not exit_:
        return False
    return not oriented or entry[0] <= exit_[-1]


def _is_proper(path: GeodesicPath, spec: BarrierSpec, t: bytes) -> bool:
    """t·Ax(f) 的 ε-邻域的入口与出口点都在路径内部"""
    axis = AxisSet(spec.f, translate=Element(path.model, t))
    inside = [i for i, v in enumerate(path.vertex_words()) if axis.distance_to_word(v) <= spec.epsilon]
    return bool(inside) and inside[0] > 0 and inside[-1] < path.length


def find_barrier(path: GeodesicPath, spec: BarrierSpec, proper: bool = False) -> Optional[Element]:
    """
    在路径上寻找 (ε, f)-屏障

    Args:
        path: 测地路径
        spec: 屏障参数
        proper: 只接受入口、出口点在路径内部的屏障；长度小于 2ε + |f| 的路径没有真屏障

    Returns:
        满足 max{d(t·o, γ), d(t·f·o, γ)} ≤ ε 的 t，不存在时为 None
    """
    if path.model != spec.f.model:
        raise ValueError("路径与屏障元素属于不同模型")
    model = path.model
    f = spec.f.word

    if spec.epsilon == 0 and not proper:
        t = _subword_barrier(path, f, spec.oriented)
        return None if t is None else Element(model, t)
    if proper and path.length < 2 * spec.epsilon + len(f):
        return None

    # t·o 必在某顶点的 ε-邻域内
    vertices = path.vertex_words()
    offsets = list(ball_words(model, spec.epsilon))
    seen = set()
    for v in vertices:
        for s in offsets:
            t = model.mul_words(v, s)
            if t in seen:
                continue
            seen.add(t)
            if not _is_barrier(model, vertices, t, f, spec.epsilon, spec.oriented):
                continue
            if proper and not _is_proper(path, spec, t):
                continue
            return Element(model, t)
    return None


def brute_force_barrier(path: GeodesicPath, spec: BarrierSpec) -> bool:
    """
    逐个检查 |t| ≤ max|v| + ε 的全部 t，不依赖邻域扫描
    """
    model = path.model
    vertices = path.vertex_words()
    reach = max(len(v) for v in vertices) + spec.epsilon
    tf_offset = spec.f.word
    for t in ball_words(model, reach):
        entry = [i for i, v in enumerate(vertices) if word_distance(model, t, v) <= spec.epsilon]
        if not entry:
            continue
        tf = model.mul_words(t, tf_offset)
        exit_ = [i for i, v in enumerate(vertices) if word_distance(model, tf, v) <= spec.epsilon]
        if exit_ and (not spec.oriented or min(entry) <= max(exit_)):
            return True
    return False


# ----------------------------------------------------------------------
# 无屏障计数
# ----------------------------------------------------------------------
@dataclass
class BarrierCensus:
    """按半径统计满足条件的元素比例"""
    label: str
    radii: List[int]
    satisfied: List[int]
    totals: List[int]
    decay_rate: Optional[float] = None
    fit_radii: List[int] = field(default_factory=list)
    parameters: Dict = field(default_factory=dict)

    @property
    def fractions(self) -> List[Fraction]:
        return [Fraction(s, t) if t else Fraction(0) for s, t in zip(self.satisfied, self.totals)]

    @property
    def exponent_gap(self) -> Optional[float]:
        """δ̂ 与该集合拟合增长指数之差，即 -log λ"""
        if self.decay_rate is None or self.decay_rate <= 0:
            return None
        return -math.log(self.decay_rate)

    def rows(self) -> List[Tuple]:
        rate = "" if self.decay_rate is None else self.decay_rate
        return [(n, s, t, float(fr), rate)
                for n, s, t, fr in zip(self.radii, self.satisfied, self.totals, self.fractions)]

    def to_csv(self) -> str:
        return ReportProtocol.encode_csv(["n", "satisfied", "total", "fraction", "fitted_rate"], self.rows())

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "radii": self.radii,
            "satisfied": self.satisfied,
            "totals": self.totals,
            "fractions": [str(fr) for fr in self.fractions],
            "decay_rate": self.decay_rate,
            "exponent_gap": self.exponent_gap,
            "fit_radii": self.fit_radii,
            "parameters": self.parameters,
        }


def fit_decay(radii: Sequence[int], fractions: Sequence[Fraction],
              window: Optional[Tuple[int, int]] = None) -> Tuple[Optional[float], List[int]]:
    """
    拟合 fraction ≈ c·λ^n 的 λ；只使用比例为正的半径
    """
    points = [(n, fr) for n, fr in zip(radii, fractions) if fr > 0
              and (window is None or window[0] <= n <= window[1])]
    if len(points) < 2:
        return None, []
    fit = fit_log_linear([n for n, _ in points], [float(fr) for _, fr in points])
    return math.exp(fit.slope), [n for n, _ in points]


def is_barrier_free_element(model: GroupModel, g: bytes, spec: BarrierSpec) -> bool:
    """存在 x ∈ B(o, M), y ∈ B(g·o, M) 使 [x, y] 无 (ε, f)-屏障"""
    if spec.m == 0:
        return find_barrier(GeodesicPath(model, b"", g), spec) is None
    slack = list(ball_words(model, spec.m))
    for s1 in slack:
        for s2 in slack:
            x = Element(model, s1)
            y = Element(model, model.mul_words(g, s2))
            if find_barrier(GeodesicPath.between(x, y), spec) is None:
                return True
    return False


def barrier_free_census(model: GroupModel, spec: BarrierSpec, max_radius: int,
                        shards: int = 1, budget: Optional[Budget] = None,
                        fit_window: Optional[Tuple[int, int]] = None) -> BarrierCensus:
    """
    各半径球面上 (ε, M, f)-无屏障元素的比例及拟合衰减率 λ

    Raises:
        BudgetExceededError: 超出枚举预算
    """
    if max_radius < 0:
        raise ValueError("最大半径必须非负")
    if spec.f.model != model:
        raise ValueError("屏障元素属于其他模型")

    radii = list(range(max_radius + 1))
    satisfied, totals = [], []
    for n in radii:
        count, total = classify_sphere(model, n, lambda w: is_barrier_free_element(model, w, spec),
                                       shards, budget)
        satisfied.append(count)
        totals.append(total)
        logger.debug(f"无屏障计数 n={n}: {count}/{total}")

    census = BarrierCensus("barrier-free", radii, satisfied, totals, parameters=spec.to_dict())
    census.decay_rate, census.fit_radii = fit_decay(radii, census.fractions, fit_window)
    logger.info(f"无屏障计数完成: f={spec.f}, ε={spec.epsilon}, λ={census.decay_rate}")
    return census


# ----------------------------------------------------------------------
# 分数无屏障
# ----------------------------------------------------------------------
def _subword_extents(path: GeodesicPath, f: bytes, oriented: bool) -> List[int]:
    """ε = 0：出现在字母 p 处的 f 占据顶点 [p, p + |f|]，[i, j] 无屏障当且仅当不含任何这样的出现"""
    model = path.model
    letters = path.letters
    n = len(letters)
    k = len(f)
    patterns = {f} if oriented else {f, model.inv_word(f)}
    reach = [n] * (n + 1)
    nearest = n
    for p in range(n, -1, -1):
        if p + k <= n and letters[p:p + k] in patterns:
            nearest = p + k - 1
        reach[p] = nearest
    return reach


def barrier_free_extents(path: GeodesicPath, spec: BarrierSpec) -> List[int]:
    """reach[i] = 使子路径 [i, j] 无屏障的最大 j"""
    if spec.epsilon == 0:
        return _subword_extents(path, spec.f.word, spec.oriented)
    reach = []
    j = 0
    for i in range(path.length + 1):
        j = max(j, i)
        # 无屏障性对子路径遗传，右端点单调
        while j < path.length and find_barrier(path.subpath(i, j + 1), spec) is None:
            j += 1
        reach.append(j)
    return reach


def fractional_coverage(path: GeodesicPath, spec: BarrierSpec, interval_length: int) -> int:
    """
    顶点互不相交、长度 ≥ L 的无屏障子区间的最大总长度

    相邻区间不共享端点，因此 θ = 1 当且仅当整条路径无屏障。
    端点落在 N_M(G·o) 中的条件在余紧模型中自动成立。
    """
    n = path.length
    reach = barrier_free_extents(path, spec)
    # best[j]：只用顶点 0..j 时的最大覆盖
    best = [0] * (n + 1)

    def gain(s: int) -> int:
        return (best[s - 1] if s > 0 else 0) - s

    # 可行起点 s ∈ [start, j - L]，两端随 j 单调；队列中 gain 递减
    window: Deque[int] = deque()
    start = 0
    for j in range(1, n + 1):
        best[j] = best[j - 1]
        while reach[start] < j:
            start += 1
        s = j - interval_length
        if s >= 0:
            while window and gain(window[-1]) <= gain(s):
                window.pop()
            window.append(s)
        while window and window[0] < start:
            window.popleft()
        if window:
            best[j] = max(best[j], gain(window[0]) + j)
    return best[n]


def fractional_barrier_census(model: GroupModel, spec: BarrierSpec, theta: Fraction,
                              interval_length: int, max_radius: int,
                              shards: int = 1, budget: Optional[Budget] = None,
                              fit_window: Optional[Tuple[int, int]] = None) -> BarrierCensus:
    """
    (θ, L)-分数无屏障元素的比例

    Args:
        theta: (0, 1] 中的比例
        interval_length: 子区间最小长度 L
    """
    theta = Fraction(theta)
    if not (0 < theta <= 1):
        raise ValueError("θ 必须在 (0, 1] 中")
    if interval_length < 1:
        raise ValueError("L 必须为正")

    def satisfies(w: bytes) -> bool:
        path = GeodesicPath(model, b"", w)
        return fractional_coverage(path, spec, interval_length) >= theta * len(w)

    radii = list(range(max_radius + 1))
    satisfied, totals = [], []
    for n in radii:
        count, total = classify_sphere(model, n, satisfies, shards, budget)
        satisfied.append(count)
        totals.append(total)

    census = BarrierCensus("fractional-barrier-free", radii, satisfied, totals,
                           parameters={**spec.to_dict(), "theta": str(theta), "L": interval_length})
    census.decay_rate, census.fit_radii = fit_decay(radii, census.fractions, fit_window)
    logger.info(f"分数无屏障计数完成: θ={theta}, L={interval_length}, λ={census.decay_rate}")
    return census

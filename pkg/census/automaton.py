"""
子群自动机(Stallings 折叠)与统计凸余紧(SCC)估计
仅适用于自由群模型
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from common.budget import Budget
from census.enumeration import fit_log_linear, sphere_words
from groups.models import Element, GroupModel

logger = logging.getLogger(__name__)


class UnsupportedModelError(ValueError):
    """该运算只支持自由群模型"""
    pass


class SubgroupAutomaton:
    """
    折叠后的子群图：状态 0 为基点，transition[(state, letter)] = state

    letter 使用模型的字母编码(2i 为 a_i，2i+1 为 a_i⁻¹)，每条边同时登记反向边。
    """

    def __init__(self, model: GroupModel, generators: Sequence[Element]):
        """
        由子群生成元构造并折叠

        Args:
            model: 自由群模型
            generators: 子群生成元(规范形)

        Raises:
            UnsupportedModelError: 非自由群模型
            ValueError: 生成元属于其他模型
        """
        if not model.is_free:
            raise UnsupportedModelError("子群自动机只支持自由群模型")
        for g in generators:
            if g.model != model:
                raise ValueError("生成元必须属于同一模型")

        self.model = model
        self.generators = [g for g in generators if not g.is_identity()]
        self.basepoint = 0
        self.transition: Dict[Tuple[int, int], int] = {}
        self.states: List[int] = []
        self._fold()

        logger.info(f"子群自动机: {len(self.generators)} 个生成元, {len(self.states)} 个状态")

    def _fold(self):
        """在花束图上反复合并同标签边直到确定"""
        inverse = self.model.inverse_letter
        # 花束：每个生成元一条基点回路，只记录正向边 (u, letter, v)
        edges: List[Tuple[int, int, int]] = []
        next_state = 1
        for g in self.generators:
            current = 0
            for i, x in enumerate(g.word):
                if i == len(g.word) - 1:
                    target = 0
                else:
                    target = next_state
                    next_state += 1
                edges.append((current, x, target))
                current = target

        parent = list(range(max(next_state, 1)))

        def find(s: int) -> int:
            while parent[s] != s:
                parent[s] = parent[parent[s]]
                s = parent[s]
            return s

        def union(s: int, t: int):
            s, t = find(s), find(t)
            if s != t:
                # 基点保持为代表
                if t == 0:
                    s, t = t, s
                parent[t] = s

        folded = False
        while not folded:
            folded = True
            table: Dict[Tuple[int, int], int] = {}
            for u, x, v in edges:
                for state, letter, target in ((find(u), x, find(v)), (find(v), inverse[x], find(u))):
                    known = table.get((state, letter))
                    if known is None:
                        table[(state, letter)] = target
                    elif known != target:
                        union(known, target)
                        folded = False
                        break
                if not folded:
                    break

        # 重新编号，基点为 0
        representatives = sorted({find(s) for s in range(len(parent))} | {find(0)})
        renumber = {s: i for i, s in enumerate(representatives)}
        for (state, letter), target in table.items():
            self.transition[(renumber[state], letter)] = renumber[target]
        self.states = list(range(len(representatives)))

    @property
    def rank(self) -> int:
        """子群的秩 = 边数 - 状态数 + 1"""
        edge_count = len(self.transition) // 2
        return edge_count - len(self.states) + 1

    def read(self, word: bytes, start: Optional[int] = None) -> Optional[int]:
        """沿字读取，无法继续时返回 None"""
        state = self.basepoint if start is None else start
        for x in word:
            state = self.transition.get((state, x))
            if state is None:
                return None
        return state

    def contains(self, h: Element) -> bool:
        """h ∈ H 当且仅当其规范形在基点处闭合"""
        if h.model != self.model:
            raise ValueError("元素属于其他模型")
        return self.read(h.word) == self.basepoint

    def member_words(self, max_radius: int) -> Iterator[bytes]:
        """按自动机引导的深度优先遍历，给出 |h| ≤ max_radius 的全部 h ∈ H(按长度再按字母序)"""
        inverse = self.model.inverse_letter
        letters = range(self.model.letter_count)
        for length in range(max_radius + 1):
            if length == 0:
                yield b""
                continue
            stack: List[Tuple[int, bytes]] = [(self.basepoint, b"")]
            while stack:
                state, word = stack.pop()
                if len(word) == length:
                    if state == self.basepoint:
                        yield word
                    continue
                # 逆序压栈以保持字母序输出
                for x in reversed(letters):
                    if word and x == inverse[word[-1]]:
                        continue
                    target = self.transition.get((state, x))
                    if target is not None:
                        stack.append((target, word + bytes([x])))

    def enumerate_members(self, max_radius: int) -> Iterator[Element]:
        for w in self.member_words(max_radius):
            yield Element(self.model, w)

    def distance_to_orbit(self, x: bytes, cutoff: int) -> Optional[int]:
        """
        d(x, H·o)，若大于 cutoff 则返回 None

        由 d(x, h·o) = |x⁻¹h| 得：存在 |w| ≤ r 使 x·w ∈ H 当且仅当距离 ≤ r
        """
        model = self.model
        for radius in range(cutoff + 1):
            for w in sphere_words(model, radius):
                if self.read(model.mul_words(x, w)) == self.basepoint:
                    return radius
        return None

    def distance_to_orbit_at_most(self, x: bytes, m1: int) -> bool:
        return self.distance_to_orbit(x, m1) is not None


@dataclass
class SccEstimate:
    """SCC 估计结果"""
    m1: int
    m2: int
    max_radius: int
    orbit_ball_counts: List[int]
    escaping_ball_counts: List[int]
    delta_orbit: float
    delta_escaping: float
    stderr_orbit: float
    stderr_escaping: float
    orbit_sample: int
    escaping_sample: int
    notes: List[str] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.delta_orbit - self.delta_escaping

    def to_dict(self) -> Dict:
        return {
            "M1": self.m1,
            "M2": self.m2,
            "max_radius": self.max_radius,
            "orbit_ball_counts": self.orbit_ball_counts,
            "escaping_ball_counts": self.escaping_ball_counts,
            "delta_orbit": self.delta_orbit,
            "delta_escaping": self.delta_escaping,
            "stderr_orbit": self.stderr_orbit,
            "stderr_escaping": self.stderr_escaping,
            "gap": self.gap,
            "orbit_sample": self.orbit_sample,
            "escaping_sample": self.escaping_sample,
            "notes": self.notes,
        }


def _fit_tail(counts: List[int]) -> Tuple[float, float]:
    """在计数为正的后一半半径上拟合指数；不足两个点时记为0"""
    radii = [n for n, c in enumerate(counts) if c > 0]
    if len(radii) < 2 or len(set(counts[radii[0]:])) == 1:
        return 0.0, 0.0
    half = max(2, (len(radii) + 1) // 2)
    radii = radii[-half:]
    fit = fit_log_linear(radii, [counts[n] for n in radii])
    return fit.slope, fit.stderr


def scc_estimate(model: GroupModel,
                 subgroup_generators: Sequence[Element],
                 m1: int,
                 m2: int,
                 max_radius: int,
                 budget: Optional[Budget] = None) -> SccEstimate:
    """
    逃逸集 O_{M1,M2} 与子群轨道的增长指数

    h 归入 O 当且仅当测地线 [o, h·o] 的内部非空且每个内部顶点到 H·o 的距离都大于 M1。
    模型中测地线唯一；M2 仅被记录。

    Raises:
        UnsupportedModelError: 非自由群模型
    """
    if m1 < 0 or m2 < 0:
        raise ValueError("M1, M2 必须非负")
    if max_radius < 1:
        raise ValueError("最大半径必须为正")
    automaton = SubgroupAutomaton(model, subgroup_generators)

    orbit_spheres = [0] * (max_radius + 1)
    escaping_spheres = [0] * (max_radius + 1)
    for word in automaton.member_words(max_radius):
        if budget is not None:
            budget.charge(1)
        orbit_spheres[len(word)] += 1
        interior = [word[:i] for i in range(1, len(word))]
        if interior and all(automaton.distance_to_orbit(x, m1) is None for x in interior):
            escaping_spheres[len(word)] += 1

    orbit_balls, escaping_balls = [], []
    running_orbit = running_escaping = 0
    for n in range(max_radius + 1):
        running_orbit += orbit_spheres[n]
        running_escaping += escaping_spheres[n]
        orbit_balls.append(running_orbit)
        escaping_balls.append(running_escaping)

    delta_orbit, stderr_orbit = _fit_tail(orbit_balls)
    delta_escaping, stderr_escaping = _fit_tail(escaping_balls)
    notes = ["unique geodesics: [o, h·o] is the only geodesic tested; M2 recorded only"]
    if running_escaping == 0:
        notes.append("escaping set empty within radius")

    logger.info(f"SCC估计: δ_H={delta_orbit:.4f}, δ_O={delta_escaping:.4f}, |O|={running_escaping}")
    return SccEstimate(
        m1=m1, m2=m2, max_radius=max_radius,
        orbit_ball_counts=orbit_balls,
        escaping_ball_counts=escaping_balls,
        delta_orbit=delta_orbit,
        delta_escaping=delta_escaping,
        stderr_orbit=stderr_orbit,
        stderr_escaping=stderr_escaping,
        orbit_sample=running_orbit,
        escaping_sample=running_escaping,
        notes=notes,
    )

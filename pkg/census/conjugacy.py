"""
共轭类计数

按稳定长度与点长度统计共轭类及本原类；类直接由循环约化字的项链(字典序最小旋转)
深度优先枚举得到，从不对球内元素做两两共轭判定。另提供转移矩阵迹的独立计数、
蛮力分类、包络检查、本原比例曲线、旋转互异性与类成员数等机制。
"""

import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from common.budget import Budget
from common.constants import DEFAULT_INDEX_CAP
from common.protocol import ReportProtocol
from census.enumeration import ball_words, fit_log_linear, sphere_words
from groups.models import ConjugacyRecord, Element, GroupModel, conjugacy_canonical
from series.analysis import EnvelopeStats, envelope_fit

logger = logging.getLogger(__name__)

_CHARGE_BATCH = 4096


@dataclass
class ConjugacyCensus:
    """
    逐半径共轭类计数(均为累计量)

    counts_pointed[n] = #C(o,n)，含单位元类与挠类；
    counts_stable_capped[n] = #{[g]: 0 < τ ≤ n, ℓ_o ≤ n}；
    primitive_* 为对应的本原类计数；classes_by_length / primitive_by_length 为恰好 τ = n 的项链数。
    """
    model: str
    max_radius: int
    counts_pointed: List[int]
    counts_stable_capped: List[int]
    primitive_pointed: List[int]
    primitive_stable_capped: List[int]
    classes_by_length: List[int]
    primitive_by_length: List[int]
    torsion_classes: int
    identity_included: bool = True
    class_index: Optional[Dict[Element, ConjugacyRecord]] = None

    def rows(self, envelope: Optional[Dict[int, float]] = None) -> List[Tuple]:
        rows = []
        for n in range(self.max_radius + 1):
            row = (n, self.counts_pointed[n], self.counts_stable_capped[n],
                   self.primitive_pointed[n], self.primitive_stable_capped[n])
            if envelope is not None:
                row = row + (envelope.get(n, 0.0),)
            rows.append(row)
        return rows

    def to_csv(self, envelope: Optional[Dict[int, float]] = None) -> str:
        header = ["n", "C(o,n)", "C(n)∩C(o,n)", "C'(o,n)", "C'(n)∩C(o,n)"]
        if envelope is not None:
            header.append("e(n)")
        return ReportProtocol.encode_csv(header, self.rows(envelope))

    def to_dict(self) -> Dict:
        return {
            "model": self.model,
            "max_radius": self.max_radius,
            "counts_pointed": self.counts_pointed,
            "counts_stable_capped": self.counts_stable_capped,
            "primitive_pointed": self.primitive_pointed,
            "primitive_stable_capped": self.primitive_stable_capped,
            "classes_by_length": self.classes_by_length,
            "primitive_by_length": self.primitive_by_length,
            "torsion_classes": self.torsion_classes,
            "identity_included": self.identity_included,
            "indexed_classes": None if self.class_index is None else len(self.class_index),
        }


def _cumulate(model: GroupModel, classes: Sequence[int], primitive: Sequence[int],
              torsion: int) -> Tuple[List[int], List[int], List[int], List[int]]:
    pointed, stable, prim_pointed, prim_stable = [], [], [], []
    total_classes = total_primitive = 0
    for n in range(len(classes)):
        if n > 0:
            total_classes += classes[n]
            total_primitive += primitive[n]
        pointed.append(1 + (torsion if n >= 1 else 0) + total_classes)
        stable.append(total_classes)
        prim_pointed.append(total_primitive)
        prim_stable.append(total_primitive)
    return pointed, stable, prim_pointed, prim_stable


def _necklace_shard(model: GroupModel, first: int, max_radius: int, collect: bool,
                    budget: Optional[Budget]) -> Tuple[List[int], List[int], List[bytes]]:
    """
    首字母固定的受约束 FKM 前项链遍历

    相邻字母不相互作用的前项链恰好构成搜索树；长度 t、周期 p 的节点在 t % p == 0 且首尾可循环相接时
    是一条项链，p == t 时是 Lyndon 字(本原类)。
    """
    classes = [0] * (max_radius + 1)
    primitive = [0] * (max_radius + 1)
    reps: List[bytes] = []
    followers = model.followers
    interacts = model.interacts
    a = [0, first]
    visited = [0]

    def visit(t: int, p: int):
        visited[0] += 1
        if budget is not None and visited[0] >= _CHARGE_BATCH:
            budget.charge(visited[0])
            visited[0] = 0
        if t % p == 0 and not interacts(a[t], a[1]):
            classes[t] += 1
            if p == t:
                primitive[t] += 1
            if collect:
                reps.append(bytes(a[1:t + 1]))
        if t == max_radius:
            return
        bound = a[t + 1 - p]
        for j in followers[a[t]]:
            if j < bound:
                continue
            a.append(j)
            visit(t + 1, p if j == bound else t + 1)
            a.pop()

    visit(1, 1)
    if budget is not None and visited[0]:
        budget.charge(visited[0])
    return classes, primitive, reps


def build_conjugacy_census(model: GroupModel,
                           max_radius: int,
                           shards: int = 1,
                           budget: Optional[Budget] = None,
                           index_cap: int = DEFAULT_INDEX_CAP) -> ConjugacyCensus:
    """
    项链深度优先枚举的共轭类计数；按首字母分片，合并为计数相加

    Raises:
        ValueError: 半径为负
        BudgetExceededError: 超过预算
    """
    if max_radius < 0:
        raise ValueError("最大半径必须非负")
    if shards < 1:
        raise ValueError("分片数必须至少为1")

    collect = max_radius <= index_cap
    classes = [0] * (max_radius + 1)
    primitive = [0] * (max_radius + 1)
    reps: List[bytes] = []
    if max_radius >= 1:
        firsts = list(range(model.letter_count))

        def run(first: int):
            return _necklace_shard(model, first, max_radius, collect, budget)

        if shards == 1:
            results = [run(x) for x in firsts]
        else:
            with ThreadPoolExecutor(max_workers=min(shards, len(firsts))) as executor:
                results = list(executor.map(run, firsts))
        for shard_classes, shard_primitive, shard_reps in results:
            for n in range(max_radius + 1):
                classes[n] += shard_classes[n]
                primitive[n] += shard_primitive[n]
            reps.extend(shard_reps)

    torsion = 0 if model.is_free else model.letter_count
    pointed, stable, prim_pointed, prim_stable = _cumulate(model, classes, primitive, torsion)

    class_index = None
    if collect:
        class_index = {}
        identity = model.identity()
        class_index[identity] = conjugacy_canonical(identity)
        if max_radius >= 1 and not model.is_free:
            for g in model.generators():
                class_index[g] = conjugacy_canonical(g)
        for w in sorted(reps, key=lambda w: (len(w), w)):
            rep = Element(model, w)
            class_index[rep] = conjugacy_canonical(rep)

    logger.info(f"共轭类计数完成: {model.describe()}, 半径={max_radius}, #C(o,n)={pointed[-1]}")
    return ConjugacyCensus(
        model=model.describe(),
        max_radius=max_radius,
        counts_pointed=pointed,
        counts_stable_capped=stable,
        primitive_pointed=prim_pointed,
        primitive_stable_capped=prim_stable,
        classes_by_length=classes,
        primitive_by_length=primitive,
        torsion_classes=torsion,
        class_index=class_index,
    )


# ----------------------------------------------------------------------
# 独立计数(转移矩阵迹 + Burnside / Möbius 反演)
# ----------------------------------------------------------------------
def _divisors(n: int) -> List[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _mobius(n: int) -> int:
    result, m, p = 1, n, 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    if m > 1:
        result = -result
    return result


def _totient(n: int) -> int:
    return sum(1 for k in range(1, n + 1) if math.gcd(k, n) == 1)


def transfer_matrix(model: GroupModel) -> np.ndarray:
    """A[x][y] = 1 当 y 可以接在 x 之后"""
    size = model.letter_count
    matrix = np.zeros((size, size), dtype=object)
    for x in range(size):
        for y in model.followers[x]:
            matrix[x, y] = 1
    return matrix


def cyclic_word_counts(model: GroupModel, max_radius: int) -> List[int]:
    """长度为 n 的循环约化(可循环相接)字数 cr(n) = tr(A^n)，精确大整数"""
    matrix = transfer_matrix(model)
    counts = [0]
    power = np.identity(model.letter_count, dtype=object)
    for _ in range(max_radius):
        power = power.dot(matrix)
        counts.append(int(np.trace(power)))
    return counts


def sphere_counts_by_transfer(model: GroupModel, max_radius: int) -> List[int]:
    """按末字母的转移递推计算球面计数，不枚举元素"""
    if max_radius < 0:
        raise ValueError("半径必须非负")
    matrix = transfer_matrix(model)
    ending = np.ones(model.letter_count, dtype=object)
    counts = [1]
    for _ in range(max_radius):
        counts.append(int(ending.sum()))
        ending = ending.dot(matrix)
    return counts


def conjugacy_counts_by_transfer(model: GroupModel, max_radius: int) -> Tuple[List[int], List[int]]:
    """
    恰好 τ = n 的类数与本原类数

    classes(n) = (1/n) Σ_{d|n} φ(n/d) cr(d)，primitive(n) = (1/n) Σ_{d|n} μ(n/d) cr(d)
    """
    cr = cyclic_word_counts(model, max_radius)
    classes, primitive = [0], [0]
    for n in range(1, max_radius + 1):
        classes.append(sum(_totient(n // d) * cr[d] for d in _divisors(n)) // n)
        primitive.append(sum(_mobius(n // d) * cr[d] for d in _divisors(n)) // n)
    return classes, primitive


def census_by_transfer(model: GroupModel, max_radius: int) -> ConjugacyCensus:
    """与项链枚举独立的计数，用于长级数与交叉校验(不建索引)"""
    classes, primitive = conjugacy_counts_by_transfer(model, max_radius)
    torsion = 0 if model.is_free else model.letter_count
    pointed, stable, prim_pointed, prim_stable = _cumulate(model, classes, primitive, torsion)
    return ConjugacyCensus(model.describe(), max_radius, pointed, stable, prim_pointed, prim_stable,
                           classes, primitive, torsion)


def brute_force_class_counts(model: GroupModel, max_radius: int,
                             budget: Optional[Budget] = None) -> Dict[str, List[int]]:
    """
    对球 N(o, max_radius) 内全部元素求规范代表并分类(项链计数的对照)

    ℓ_o ≤ n 的类必有成员落在 N(o, n) 中，因此球内出现过的类即全部 ℓ_o ≤ max_radius 的类。
    """
    records: Dict[bytes, ConjugacyRecord] = {}
    for w in ball_words(model, max_radius, budget=budget):
        record = conjugacy_canonical(Element(model, w))
        records.setdefault(record.canonical_rep.word, record)

    result = {key: [0] * (max_radius + 1) for key in
              ("counts_pointed", "counts_stable_capped", "primitive_pointed", "primitive_stable_capped")}
    for record in records.values():
        for n in range(record.pointed_length, max_radius + 1):
            result["counts_pointed"][n] += 1
            if record.tau > 0:
                result["counts_stable_capped"][n] += 1
            if record.is_primitive:
                result["primitive_pointed"][n] += 1
                if record.tau > 0:
                    result["primitive_stable_capped"][n] += 1
    return result


# ----------------------------------------------------------------------
# 包络与本原比例
# ----------------------------------------------------------------------
_SERIES_FIELDS = ("counts_pointed", "counts_stable_capped", "primitive_pointed", "primitive_stable_capped")


def envelope_check(census: ConjugacyCensus, delta_hat: float,
                   window: Tuple[int, int]) -> Dict[str, EnvelopeStats]:
    """
    e(n) = n·count(n)·exp(-δ̂ n)，对四个计数数组分别给出窗口内的极值与比值

    Raises:
        ValueError: 窗口少于两个半径、包含0或超出计数范围
    """
    low, high = window
    if low < 1:
        raise ValueError("窗口必须从 n ≥ 1 开始(e(0) 约定为0)")
    if high - low < 1:
        raise ValueError("窗口太小，至少需要两个半径")
    if high > census.max_radius:
        raise ValueError(f"窗口上界 {high} 超过计数半径 {census.max_radius}")
    return {name: envelope_fit(getattr(census, name), delta_hat, window) for name in _SERIES_FIELDS}


@dataclass
class PrimitiveRatioCurve:
    """本原比例：点长度版本(含单位元)、非平凡类版本与稳定长度版本"""
    ratios_pointed: List[Fraction]
    ratios_nontrivial: List[Fraction]
    ratios_stable: List[Fraction]
    decay_rate: Optional[float]
    fit_radii: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "ratios_pointed": [str(r) for r in self.ratios_pointed],
            "ratios_nontrivial": [str(r) for r in self.ratios_nontrivial],
            "ratios_stable": [str(r) for r in self.ratios_stable],
            "decay_rate": self.decay_rate,
            "fit_radii": self.fit_radii,
        }


def primitive_ratio_curve(census: ConjugacyCensus) -> PrimitiveRatioCurve:
    """#C'(o,n)/#C(o,n) 及其稳定长度类比；1 - ratio 的衰减率为 exp(拟合斜率)"""
    pointed, nontrivial, stable = [], [], []
    for n in range(census.max_radius + 1):
        pointed.append(Fraction(census.primitive_pointed[n], census.counts_pointed[n]))
        others = census.counts_pointed[n] - 1
        nontrivial.append(Fraction(census.primitive_pointed[n], others) if others else Fraction(1))
        capped = census.counts_stable_capped[n]
        stable.append(Fraction(census.primitive_stable_capped[n], capped) if capped else Fraction(1))

    radii = [n for n in range(1, census.max_radius + 1) if stable[n] < 1]
    decay = None
    if len(radii) >= 2:
        fit = fit_log_linear(radii, [float(1 - stable[n]) for n in radii])
        decay = math.exp(fit.slope)
    return PrimitiveRatioCurve(pointed, nontrivial, stable, decay, radii)


def primitive_genericity_bound(census: ConjugacyCensus, delta_hat: float,
                               window: Tuple[int, int]) -> Dict:
    """
    检查 1 - #C'(o,n)/#C(o,n) ≤ c·n·exp(-δ̂ n/2)：c 在窗口前一半上拟合(取最大值)，再在整个窗口上检验
    """
    low, high = window
    if high - low < 1 or high > census.max_radius or low < 1:
        raise ValueError("窗口不合法")
    curve = primitive_ratio_curve(census)
    normalized = {n: float(1 - curve.ratios_pointed[n]) / (n * math.exp(-delta_hat * n / 2))
                  for n in range(low, high + 1)}
    split = low + (high - low) // 2
    c = max(normalized[n] for n in range(low, split + 1))
    holds = all(normalized[n] <= c * (1 + 1e-12) for n in normalized)
    return {"c": c, "holds": holds, "normalized": normalized, "window": [low, high]}


# ----------------------------------------------------------------------
# 旋转与类成员
# ----------------------------------------------------------------------
def rotation_distinctness(g: Element) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """
    循环约化字的全部旋转是否两两不同；否则给出第一对重合的旋转下标

    Raises:
        ValueError: g 不是循环约化的
    """
    w = g.word
    if not g.model.is_cyclically_reduced(w):
        raise ValueError(f"{g} 不是循环约化的")
    seen: Dict[bytes, int] = {}
    for i in range(len(w)):
        rotation = w[i:] + w[:i]
        if rotation in seen:
            return False, (seen[rotation], i)
        seen[rotation] = i
    return True, None


@dataclass
class AnnulusMultiplicity:
    n: int
    delta: int
    counts: Dict[str, int]
    max_count: int

    @property
    def empirical_l(self) -> float:
        return self.max_count / self.n if self.n else 0.0

    def to_dict(self) -> Dict:
        return {"n": self.n, "delta": self.delta, "counts": self.counts,
                "max_count": self.max_count, "empirical_L": self.empirical_l}


def class_members(g: Element, max_length: int, budget: Optional[Budget] = None) -> List[bytes]:
    """
    [g] 中长度 ≤ max_length 的全部成员

    从循环约化核出发，用生成元共轭做闭包；共轭子逐字母增长时长度单调不减，所以闭包不会漏掉成员。
    """
    model = g.model
    core, _ = model.cyclic_reduce_word(g.word)
    if len(core) > max_length:
        return []
    generators = [bytes([x]) for x in range(model.letter_count)]
    inverses = [model.inv_word(s) for s in generators]
    seen = {core}
    frontier = [core]
    while frontier:
        nxt = []
        for m in frontier:
            for s, s_inv in zip(generators, inverses):
                candidate = model.mul_words(model.mul_words(s, m), s_inv)
                if len(candidate) <= max_length and candidate not in seen:
                    seen.add(candidate)
                    nxt.append(candidate)
        if budget is not None:
            budget.charge(len(nxt))
        frontier = nxt
    return sorted(seen, key=lambda w: (len(w), w))


def class_annulus_multiplicity(model: GroupModel, n: int, delta: int,
                               sample_classes: Sequence[Element],
                               budget: Optional[Budget] = None) -> AnnulusMultiplicity:
    """各样本类在 A(o, n, Δ) 中的成员数，以及最大值除以 n(经验常数 L)"""
    if n < 1 or delta < 0:
        raise ValueError("要求 n ≥ 1 且 Δ ≥ 0")
    counts: Dict[str, int] = {}
    for g in sample_classes:
        if g.model != model:
            raise ValueError("样本类必须属于同一模型")
        members = class_members(g, n + delta, budget)
        counts[str(conjugacy_canonical(g).canonical_rep)] = sum(
            1 for m in members if n - delta <= len(m) <= n + delta)
    max_count = max(counts.values()) if counts else 0
    return AnnulusMultiplicity(n, delta, counts, max_count)


# ----------------------------------------------------------------------
# 闭合引理机制
# ----------------------------------------------------------------------
@dataclass
class ClosingLemmaCensus:
    n: int
    delta: int
    sigma: int
    power: int
    chosen: str
    annulus_size: int
    sampled: int
    t_sizes: Dict[str, int]
    theta: float
    distinct_classes: int
    max_class_multiplicity: int
    max_length_deviation: int

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def default_contracting_triple(model: GroupModel) -> List[Element]:
    """三条最短的本原双曲类代表"""
    triple: List[Element] = []
    length = 1
    while len(triple) < 3:
        for w in sphere_words(model, length):
            g = Element(model, w)
            if model.is_cyclically_reduced(w) and not g.is_torsion():
                record = conjugacy_canonical(g)
                if record.is_primitive and record.canonical_rep == g and record.tau >= 2:
                    triple.append(g)
                    if len(triple) == 3:
                        break
        length += 1
    return triple


def closing_lemma_census(model: GroupModel, n: int, delta: int = 1,
                         candidates: Optional[Sequence[Element]] = None,
                         power: int = 2, sigma: int = 1, sample_size: int = 500,
                         seed: int = 0, budget: Optional[Budget] = None) -> ClosingLemmaCensus:
    """
    A(o,n,Δ) 中满足 diam π_{Ax(f̃)}[o, g·o] ≤ σ 的子集 T 的比例，以及 g ↦ [f̃^k g] 的多重度

    f̃ 取候选中 T 最大者；超过 sample_size 时对环带做带种子的抽样。
    """
    from geometry.axis import AxisSet, GeodesicPath, path_projection_diameter

    if n < 1 or delta < 0 or power < 1 or sigma < 0:
        raise ValueError("参数不合法")
    candidates = list(candidates) if candidates else default_contracting_triple(model)
    annulus = [w for radius in range(max(0, n - delta), n + delta + 1)
               for w in sphere_words(model, radius, budget=budget)]
    sample = annulus
    if len(annulus) > sample_size:
        sample = random.Random(seed).sample(annulus, sample_size)
        sample.sort(key=lambda w: (len(w), w))

    t_sets: Dict[str, List[bytes]] = {}
    for f in candidates:
        axis = AxisSet(f, radius=n + delta + len(f) + 2)
        t_sets[str(f)] = [w for w in sample
                          if path_projection_diameter(GeodesicPath(model, b"", w), axis) <= sigma]

    chosen_index = max(range(len(candidates)), key=lambda i: len(t_sets[str(candidates[i])]))
    chosen = candidates[chosen_index]
    t_set = t_sets[str(chosen)]
    f_power = model.pow_word(chosen.word, power)

    multiplicity: Dict[bytes, int] = {}
    deviation = 0
    for w in t_set:
        record = conjugacy_canonical(Element(model, model.mul_words(f_power, w)))
        multiplicity[record.canonical_rep.word] = multiplicity.get(record.canonical_rep.word, 0) + 1
        deviation = max(deviation, abs(record.tau - (len(w) + len(f_power))))

    theta = len(t_set) / len(sample) if sample else 0.0
    logger.info(f"闭合引理计数: n={n}, θ={theta:.3f}, 选用 f̃={chosen}")
    return ClosingLemmaCensus(
        n=n, delta=delta, sigma=sigma, power=power, chosen=str(chosen),
        annulus_size=len(annulus), sampled=len(sample),
        t_sizes={k: len(v) for k, v in t_sets.items()},
        theta=theta,
        distinct_classes=len(multiplicity),
        max_class_multiplicity=max(multiplicity.values()) if multiplicity else 0,
        max_length_deviation=deviation,
    )

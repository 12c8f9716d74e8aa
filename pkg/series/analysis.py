"""
增长级数与共轭增长级数：系数、包络拟合与有理性(线性递推)探测

所有级数运算都是精确的(大整数 / Fraction)，只在最终报告时转为浮点数。
"""

import logging
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from common.budget import Budget
from common.constants import NO_RECURRENCE_TEMPLATE, SeriesKind

logger = logging.getLogger(__name__)


class InsufficientDataError(ValueError):
    """系数不足以判定给定阶数的递推"""
    pass


@dataclass
class EnvelopeStats:
    """窗口内 n·c_n·exp(-δ̂ n) 的取值与极值"""
    window: Tuple[int, int]
    values: Dict[int, float]
    minimum: float
    maximum: float
    median: float

    @property
    def ratio(self) -> float:
        if self.minimum <= 0:
            return math.inf
        return self.maximum / self.minimum

    def to_dict(self) -> Dict:
        return {"window": list(self.window), "values": {str(k): v for k, v in self.values.items()},
                "min": self.minimum, "max": self.maximum, "median": self.median, "ratio": self.ratio}


def envelope_fit(coefficients: Sequence[int], delta_hat: float, window: Tuple[int, int]) -> EnvelopeStats:
    """
    包络值 n·c_n·exp(-δ̂ n)；n = 0 处约定为0

    Raises:
        ValueError: 窗口为空或超出数据范围
    """
    low, high = window
    if high < low:
        raise ValueError("窗口为空")
    if low < 0 or high >= len(coefficients):
        raise ValueError(f"窗口 [{low}, {high}] 超出数据范围 0..{len(coefficients) - 1}")
    values = {}
    for n in range(low, high + 1):
        values[n] = 0.0 if n == 0 else float(n * coefficients[n]) * math.exp(-delta_hat * n)
    items = list(values.values())
    return EnvelopeStats((low, high), values, min(items), max(items), statistics.median(items))


# ----------------------------------------------------------------------
# 线性递推
# ----------------------------------------------------------------------
@dataclass
class Recurrence:
    """c_n = Σ_{i=1}^{order} coefficients[i-1]·c_{n-i}，对 n ≥ order 成立"""
    order: int
    coefficients: List[Fraction]

    def to_dict(self) -> Dict:
        return {"order": self.order, "coefficients": [str(c) for c in self.coefficients]}


def berlekamp_massey(sequence: Sequence) -> Tuple[int, List[Fraction]]:
    """
    有理数域上的 Berlekamp–Massey

    Returns:
        (线性复杂度 L, 连接多项式系数 [1, C_1, ..., C_L])
    """
    seq = [Fraction(x) for x in sequence]
    total = len(seq)
    curr_guess = [Fraction(1)] + [Fraction(0)] * total
    prev_guess = [Fraction(1)] + [Fraction(0)] * total
    L = 0
    m = -1
    prev_discrepancy = Fraction(1)

    for n in range(total):
        # 当前连接多项式下的差异
        d = seq[n]
        for i in range(1, L + 1):
            d += curr_guess[i] * seq[n - i]
        if d == 0:
            continue

        temp = curr_guess[:]
        scale = d / prev_discrepancy
        shift = n - m
        for i in range(shift, total + 1):
            curr_guess[i] -= scale * prev_guess[i - shift]
        if 2 * L <= n:
            L = n + 1 - L
            prev_guess = temp
            prev_discrepancy = d
            m = n

    return L, curr_guess[:L + 1]


def verify_recurrence(coefficients: Sequence[int], recurrence: Recurrence) -> bool:
    """精确检查递推在初始段之后重现全部系数"""
    for n in range(recurrence.order, len(coefficients)):
        predicted = sum(c * coefficients[n - i - 1] for i, c in enumerate(recurrence.coefficients))
        if predicted != coefficients[n]:
            return False
    return True


def rationality_probe(coefficients: Sequence[int], max_order: int) -> Optional[Recurrence]:
    """
    最小阶线性递推；阶数超过 max_order 时返回 None

    Raises:
        InsufficientDataError: 系数个数少于 2·max_order + 2
    """
    if max_order < 0:
        raise ValueError("最大阶数必须非负")
    if len(coefficients) < 2 * max_order + 2:
        raise InsufficientDataError(
            f"判定 ≤{max_order} 阶递推至少需要 {2 * max_order + 2} 项，只有 {len(coefficients)} 项")

    order, connection = berlekamp_massey(coefficients)
    if order > max_order:
        logger.info(NO_RECURRENCE_TEMPLATE.format(order=max_order, terms=len(coefficients)))
        return None
    recurrence = Recurrence(order, [-c for c in connection[1:]])
    if not verify_recurrence(coefficients, recurrence):
        # 由复杂度界不会发生
        raise ArithmeticError("递推校验失败")
    logger.info(f"检测到 {order} 阶递推: {[str(c) for c in recurrence.coefficients]}")
    return recurrence


def annulus_aggregate(coefficients: Sequence[int], delta: int) -> List[int]:
    """a_n = Σ_{|m-n| ≤ Δ} c_m，只在数据完整的 n 上给出"""
    if delta < 0:
        raise ValueError("环带宽度必须非负")
    return [sum(coefficients[max(0, n - delta):n + delta + 1])
            for n in range(len(coefficients) - delta)]


# ----------------------------------------------------------------------
# 系数
# ----------------------------------------------------------------------
def series_coefficients(model, kind: str, max_n: int, shards: int = 1,
                        budget: Optional[Budget] = None, method: str = "transfer") -> List[int]:
    """
    精确系数

    Args:
        kind: SeriesKind 之一；共轭类级数按恰好长度计数，本原与稳定截断两类在 0 处为0
        method: 共轭类级数使用 "transfer"(转移矩阵迹) 或 "necklace"(项链枚举)

    Raises:
        ValueError: 未知类型
    """
    from census.conjugacy import build_conjugacy_census, census_by_transfer
    from census.enumeration import sphere_counts

    if max_n < 0:
        raise ValueError("最大阶数必须非负")
    if kind == SeriesKind.SPHERE:
        return sphere_counts(model, max_n, shards, budget)
    if kind == SeriesKind.BALL:
        spheres = sphere_counts(model, max_n, shards, budget)
        balls, running = [], 0
        for s in spheres:
            running += s
            balls.append(running)
        return balls
    if kind not in SeriesKind.ALL:
        raise ValueError(f"未知的级数类型: {kind}")

    if method == "necklace":
        census = build_conjugacy_census(model, max_n, shards=shards, budget=budget, index_cap=-1)
    elif method == "transfer":
        census = census_by_transfer(model, max_n)
    else:
        raise ValueError(f"未知的计数方法: {method}")

    if kind == SeriesKind.CONJUGACY_POINTED:
        coefficients = [1] + list(census.classes_by_length[1:])
        if max_n >= 1:
            coefficients[1] += census.torsion_classes
        return coefficients
    if kind == SeriesKind.CONJUGACY_PRIMITIVE:
        return [0] + list(census.primitive_by_length[1:])
    return [0] + list(census.classes_by_length[1:])


@dataclass
class SeriesReport:
    kind: str
    coefficients: List[int]
    recurrence: Optional[Recurrence]
    max_order: int
    delta_hat: float
    envelope: Optional[EnvelopeStats]
    annulus_width: Optional[int] = None
    annulus_coefficients: List[int] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.recurrence is None:
            return NO_RECURRENCE_TEMPLATE.format(order=self.max_order, terms=len(self.coefficients))
        return f"linear recurrence of order {self.recurrence.order}"

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "coefficients": self.coefficients,
            "recurrence": None if self.recurrence is None else self.recurrence.to_dict(),
            "max_order": self.max_order,
            "verdict": self.verdict,
            "delta_hat": self.delta_hat,
            "envelope": None if self.envelope is None else self.envelope.to_dict(),
            "annulus_width": self.annulus_width,
            "annulus_coefficients": self.annulus_coefficients,
        }


def build_series_report(model, kind: str, max_n: int, max_order: int,
                        window: Optional[Tuple[int, int]] = None,
                        delta_hat: Optional[float] = None,
                        annulus_width: Optional[int] = None,
                        shards: int = 1, budget: Optional[Budget] = None) -> SeriesReport:
    """系数 + 递推探测 + 包络；δ̂ 缺省时由同一模型的球计数拟合"""
    from census.enumeration import build_census, growth_exponent

    coefficients = series_coefficients(model, kind, max_n, shards, budget)
    recurrence = rationality_probe(coefficients, max_order)
    if delta_hat is None:
        delta_hat, _ = growth_exponent(build_census(model, max(max_n, 3), 0, shards, budget))
    envelope = None
    if window is not None:
        envelope = envelope_fit(coefficients, delta_hat, window)
    annulus = annulus_aggregate(coefficients, annulus_width) if annulus_width is not None else []
    return SeriesReport(kind, coefficients, recurrence, max_order, delta_hat, envelope,
                        annulus_width, annulus)

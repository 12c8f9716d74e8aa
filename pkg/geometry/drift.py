"""
线性漂移计数

对球面上的 g 分别统计三个条件及其合取的比例：
(1) τ[g] ≥ (1 − θ1)·n；(2) d(o, 轴) ≤ θ2·n；(3) 轴上含 (ε, f^m)-屏障。
条件(3)只检查规范轴线(模型中测地线唯一)。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from common.budget import Budget
from common.protocol import ReportProtocol
from census.enumeration import fit_log_linear, shard_plan, shard_words
from geometry.axis import translation_axis
from geometry.barriers import BarrierSpec, find_barrier
from groups.models import Element, GroupModel

logger = logging.getLogger(__name__)

CLAUSES = ("stable_length", "axis_distance", "barrier", "all")


@dataclass
class DriftCensus:
    radii: List[int]
    totals: List[int]
    counts: Dict[str, List[int]]
    approach_rate: Optional[float] = None
    parameters: Dict = field(default_factory=dict)

    def fractions(self, clause: str) -> List[Fraction]:
        return [Fraction(c, t) if t else Fraction(0) for c, t in zip(self.counts[clause], self.totals)]

    def to_csv(self) -> str:
        header = ["n", "total"] + [f"{c}_satisfied" for c in CLAUSES] + ["fraction", "fitted_rate"]
        rows = []
        for k, n in enumerate(self.radii):
            total = self.totals[k]
            conj = self.counts["all"][k]
            rows.append([n, total] + [self.counts[c][k] for c in CLAUSES]
                        + [conj / total if total else 0.0, "" if self.approach_rate is None else self.approach_rate])
        return ReportProtocol.encode_csv(header, rows)

    def to_dict(self) -> Dict:
        return {
            "radii": self.radii,
            "totals": self.totals,
            "counts": self.counts,
            "fractions": {c: [str(x) for x in self.fractions(c)] for c in CLAUSES},
            "approach_rate": self.approach_rate,
            "parameters": self.parameters,
        }


def drift_clauses(g: Element, n: int, theta1: Fraction, theta2: Fraction,
                  spec: BarrierSpec) -> Tuple[bool, bool, bool]:
    """单个元素的三个条件；单位元与挠元素三项都不满足"""
    if g.is_identity() or g.is_torsion():
        return False, False, False
    model = g.model
    core, _ = model.cyclic_reduce_word(g.word)
    tau = len(core)
    line = translation_axis(g, periods=1)
    axis_distance = min(len(v) for v in line.vertex_words())

    clause1 = tau >= (1 - theta1) * n
    clause2 = axis_distance <= theta2 * n
    # 轴在 g 作用下不变，检查长度 ≥ τ + |f^m| + 2ε 的一段即可
    periods = (len(spec.f) + 2 * spec.epsilon) // max(tau, 1) + 2
    clause3 = find_barrier(translation_axis(g, periods), spec) is not None
    return clause1, clause2, clause3


def linear_drift_census(model: GroupModel, f: Element, m: int, theta1: Fraction, theta2: Fraction,
                        max_radius: int, epsilon: int = 0, shards: int = 1,
                        budget: Optional[Budget] = None) -> DriftCensus:
    """
    Args:
        f, m: 屏障元素取 f^m
        theta1, theta2: [0, 1] 中的比例

    Raises:
        BudgetExceededError: 超出预算
    """
    theta1, theta2 = Fraction(theta1), Fraction(theta2)
    if not (0 <= theta1 <= 1 and 0 <= theta2 <= 1):
        raise ValueError("θ1, θ2 必须在 [0, 1] 中")
    if m < 1:
        raise ValueError("m 必须为正")
    # 双向无穷测地线没有固定方向
    spec = BarrierSpec(epsilon, f ** m, oriented=False)

    radii = list(range(1, max_radius + 1))
    totals: List[int] = []
    counts: Dict[str, List[int]] = {c: [] for c in CLAUSES}
    for n in radii:
        plan = shard_plan(model, n, shards)

        def run_shard(prefix: bytes, n: int = n) -> Tuple[int, Dict[str, int]]:
            tally = dict.fromkeys(CLAUSES, 0)
            total = 0
            for w in shard_words(model, prefix, n, budget):
                total += 1
                c1, c2, c3 = drift_clauses(Element(model, w), n, theta1, theta2, spec)
                tally["stable_length"] += c1
                tally["axis_distance"] += c2
                tally["barrier"] += c3
                tally["all"] += c1 and c2 and c3
            return total, tally

        if len(plan) == 1:
            results = [run_shard(plan[0])]
        else:
            with ThreadPoolExecutor(max_workers=min(shards, len(plan))) as executor:
                results = list(executor.map(run_shard, plan))
        total = sum(r[0] for r in results)
        tally = {c: sum(r[1][c] for r in results) for c in CLAUSES}
        totals.append(total)
        for c in CLAUSES:
            counts[c].append(tally[c])
        logger.debug(f"线性漂移 n={n}: {tally['all']}/{total}")

    census = DriftCensus(radii, totals, counts, parameters={
        "f": str(f), "m": m, "theta1": str(theta1), "theta2": str(theta2), "epsilon": epsilon})
    complement = [(n, 1 - fr) for n, fr in zip(radii, census.fractions("all")) if fr < 1]
    if len(complement) >= 2:
        fit = fit_log_linear([n for n, _ in complement], [float(x) for _, x in complement])
        census.approach_rate = math.exp(fit.slope)
    logger.info(f"线性漂移计数完成: f^{m}={spec.f}, 收敛率={census.approach_rate}")
    return census

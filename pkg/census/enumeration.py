"""
Cayley 图上的球面、球与环带枚举，以及增长指数估计

枚举是按末字母约束的深度优先遍历(后继表 O(1) 生成)，可按长度≤2的前缀分片并发执行；
各分片结果按分片计划顺序拼接，因此串行与并行输出完全一致。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from common.budget import Budget
from common.constants import DEFAULT_DELTA_WIDTH, FIT_TOLERANCE
from common.protocol import ReportProtocol
from groups.models import Element, GroupModel

logger = logging.getLogger(__name__)

# 按批记账，减少锁竞争
_CHARGE_BATCH = 4096


def shard_plan(model: GroupModel, n: int, shards: int = 1) -> List[bytes]:
    """
    分片计划

    Args:
        model: 群模型
        n: 目标长度
        shards: 分片数；1 表示不分片

    Returns:
        按字母序排列的前缀列表(长度为 0、1 或 2)
    """
    if shards < 1:
        raise ValueError("分片数必须至少为1")
    if shards == 1 or n == 0:
        return [b""]
    depth = 1 if (shards <= model.letter_count or n == 1) else 2
    return list(_extend(model, b"", depth))


def _extend(model: GroupModel, prefix: bytes, n: int) -> Iterator[bytes]:
    """以 prefix 开头、长度为 n 的所有规范形(字母序)"""
    if len(prefix) > n:
        return
    if len(prefix) == n:
        yield prefix
        return
    followers = model.followers
    word = bytearray(prefix)
    start = len(word)
    # 显式栈: 每层保存候选后继及当前位置
    stack = [(followers[word[-1]] if word else followers[-1], 0)]
    while stack:
        options, position = stack[-1]
        if position >= len(options):
            stack.pop()
            if len(word) > start:
                word.pop()
            continue
        stack[-1] = (options, position + 1)
        x = options[position]
        word.append(x)
        if len(word) == n:
            yield bytes(word)
            word.pop()
        else:
            stack.append((followers[x], 0))


def _charged(words: Iterator[bytes], budget: Optional[Budget]) -> Iterator[bytes]:
    pending = 0
    for w in words:
        pending += 1
        if budget is not None and pending >= _CHARGE_BATCH:
            budget.charge(pending)
            pending = 0
        yield w
    if budget is not None and pending:
        budget.charge(pending)


def _require(model: GroupModel, n: int, budget: Optional[Budget]):
    """枚举前按球面大小预检查预算"""
    if budget is not None:
        budget.require(sphere_counts(model, n)[n])


def sphere_words(model: GroupModel,
                 n: int,
                 shards: int = 1,
                 budget: Optional[Budget] = None) -> Iterator[bytes]:
    """
    长度恰为 n 的规范字(bytes)，每个恰好一次

    Raises:
        ValueError: n < 0
        BudgetExceededError: 超过预算；球面大小超过剩余预算时在枚举前抛出
    """
    if n < 0:
        raise ValueError("半径必须非负")
    _require(model, n, budget)
    plan = shard_plan(model, n, shards)
    if len(plan) == 1:
        yield from _charged(_extend(model, plan[0], n), budget)
        return

    def run_shard(prefix: bytes) -> List[bytes]:
        words = list(_charged(_extend(model, prefix, n), budget))
        logger.debug(f"分片 {model.format_word(prefix)} 完成: {len(words)} 个元素")
        return words

    with ThreadPoolExecutor(max_workers=min(shards, len(plan))) as executor:
        for words in executor.map(run_shard, plan):
            yield from words


def shard_words(model: GroupModel, prefix: bytes, n: int,
                budget: Optional[Budget] = None) -> Iterator[bytes]:
    """单个分片：以 prefix 开头、长度为 n 的规范字"""
    return _charged(_extend(model, prefix, n), budget)


def classify_sphere(model: GroupModel, n: int, predicate, shards: int = 1,
                    budget: Optional[Budget] = None) -> Tuple[int, int]:
    """
    按分片对球面 S(o, n) 上的元素做判定计数

    Returns:
        (满足判定的个数, 球面大小)；合并只是求和，结果与分片数无关
    """
    _require(model, n, budget)
    plan = shard_plan(model, n, shards)

    def run_shard(prefix: bytes) -> Tuple[int, int]:
        hits = total = 0
        for w in shard_words(model, prefix, n, budget):
            total += 1
            if predicate(w):
                hits += 1
        return hits, total

    if len(plan) == 1:
        return run_shard(plan[0])
    with ThreadPoolExecutor(max_workers=min(shards, len(plan))) as executor:
        results = list(executor.map(run_shard, plan))
    return sum(r[0] for r in results), sum(r[1] for r in results)


def enumerate_sphere(model: GroupModel,
                     n: int,
                     shards: int = 1,
                     budget: Optional[Budget] = None) -> Iterator[Element]:
    """球面 S(o, n) 上的元素流"""
    for w in sphere_words(model, n, shards, budget):
        yield Element(model, w)


def ball_words(model: GroupModel, n: int, shards: int = 1,
               budget: Optional[Budget] = None) -> Iterator[bytes]:
    for radius in range(n + 1):
        yield from sphere_words(model, radius, shards, budget)


def enumerate_ball(model: GroupModel, n: int, shards: int = 1,
                   budget: Optional[Budget] = None) -> Iterator[Element]:
    """球 N(o, n) 按短字典序"""
    for w in ball_words(model, n, shards, budget):
        yield Element(model, w)


def enumerate_annulus(model: GroupModel, n: int, delta: int = DEFAULT_DELTA_WIDTH,
                      shards: int = 1, budget: Optional[Budget] = None) -> Iterator[Element]:
    """环带 A(o, n, Δ) = {g: |d(o, go) - n| ≤ Δ}"""
    if delta < 0:
        raise ValueError("环带宽度必须非负")
    for radius in range(max(0, n - delta), n + delta + 1):
        for w in sphere_words(model, radius, shards, budget):
            yield Element(model, w)


def stream_digest(words) -> str:
    """与顺序无关的摘要；接受 bytes 或 Element"""
    return ReportProtocol.digest(w.word if isinstance(w, Element) else w for w in words)


# ----------------------------------------------------------------------
# 计数
# ----------------------------------------------------------------------
def sphere_counts(model: GroupModel,
                  max_radius: int,
                  shards: int = 1,
                  budget: Optional[Budget] = None) -> List[int]:
    """
    球面计数 s(0..max_radius)

    按末字母聚合前沿的广度优先计数：前沿只记录"以各字母结尾的字有多少个"，
    计数精确，且按被计数的元素数记账。

    Raises:
        BudgetExceededError: 被计数元素总数超过预算
    """
    if max_radius < 0:
        raise ValueError("半径必须非负")
    counts = [0] * (max_radius + 1)
    counts[0] = 1
    if max_radius == 0:
        return counts

    prefixes = shard_plan(model, max_radius, shards)
    depth = len(prefixes[0])
    # 前缀本身以下的层直接由前缀长度决定
    for radius in range(1, depth + 1):
        counts[radius] = sum(1 for _ in _extend(model, b"", radius))

    def run_shard(prefix: bytes) -> List[int]:
        shard_counts = [0] * (max_radius + 1)
        if not prefix:
            frontier: Dict[int, int] = {x: 1 for x in model.followers[-1]}
            level = 1
        else:
            frontier = {prefix[-1]: 1}
            level = len(prefix)
        shard_counts[level] = sum(frontier.values())
        while level < max_radius:
            nxt: Dict[int, int] = {}
            for last, count in frontier.items():
                for y in model.followers[last]:
                    nxt[y] = nxt.get(y, 0) + count
            frontier = nxt
            level += 1
            shard_counts[level] = sum(frontier.values())
            if budget is not None:
                budget.charge(shard_counts[level])
        return shard_counts

    if len(prefixes) == 1:
        results = [run_shard(prefixes[0])]
    else:
        with ThreadPoolExecutor(max_workers=min(shards, len(prefixes))) as executor:
            results = list(executor.map(run_shard, prefixes))

    for radius in range(depth + 1, max_radius + 1):
        counts[radius] = sum(r[radius] for r in results)
    return counts


@dataclass
class CensusTable:
    """逐半径计数表"""
    model: str
    radii: List[int]
    sphere_counts: List[int]
    ball_counts: List[int]
    annulus_width: int
    annulus_counts: List[int]

    def rows(self) -> List[Tuple[int, int, int, int]]:
        return [(n, self.sphere_counts[n], self.ball_counts[n], self.annulus_counts[n]) for n in self.radii]

    def to_csv(self) -> str:
        return ReportProtocol.encode_csv(("n", "sphere", "ball", "annulus"), self.rows())

    def to_dict(self) -> Dict:
        return {
            "model": self.model,
            "radii": self.radii,
            "sphere_counts": self.sphere_counts,
            "ball_counts": self.ball_counts,
            "annulus_width": self.annulus_width,
            "annulus_counts": self.annulus_counts,
        }


def build_census(model: GroupModel,
                 max_radius: int,
                 delta: int = DEFAULT_DELTA_WIDTH,
                 shards: int = 1,
                 budget: Optional[Budget] = None) -> CensusTable:
    """
    构建计数表；环带计数需要半径到 max_radius + Δ 的球面计数

    Raises:
        ValueError: 参数不合法
        BudgetExceededError: 超过预算
    """
    if max_radius < 0:
        raise ValueError("最大半径必须非负")
    if delta < 0:
        raise ValueError("环带宽度必须非负")

    spheres = sphere_counts(model, max_radius + delta, shards, budget)
    balls = []
    running = 0
    for n in range(max_radius + 1):
        running += spheres[n]
        balls.append(running)
    annuli = [sum(spheres[max(0, n - delta):n + delta + 1]) for n in range(max_radius + 1)]

    logger.info(f"计数表完成: {model.describe()}, 最大半径={max_radius}, Δ={delta}, 球大小={balls[-1]}")
    return CensusTable(
        model=model.describe(),
        radii=list(range(max_radius + 1)),
        sphere_counts=spheres[:max_radius + 1],
        ball_counts=balls,
        annulus_width=delta,
        annulus_counts=annuli,
    )


# ----------------------------------------------------------------------
# 增长指数
# ----------------------------------------------------------------------
@dataclass
class FitDiagnostics:
    """最小二乘拟合诊断"""
    radii: List[int]
    slope: float
    intercept: float
    residuals: List[float]
    stderr: float
    degenerate: bool = False
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "radii": self.radii,
            "slope": self.slope,
            "intercept": self.intercept,
            "residuals": self.residuals,
            "stderr": self.stderr,
            "degenerate": self.degenerate,
            "notes": self.notes,
        }


def fit_log_linear(radii: List[int], values: List[float]) -> FitDiagnostics:
    """
    对 log(values) 关于半径做一次最小二乘拟合

    Raises:
        ValueError: 点数不足2或存在非正值
    """
    if len(radii) < 2:
        raise ValueError("拟合至少需要两个点")
    if any(v <= 0 for v in values):
        raise ValueError("对数拟合要求所有值为正")
    x = np.asarray(radii, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    stderr = 0.0
    if len(x) > 2:
        sxx = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(float(np.sum(residuals ** 2)) / (len(x) - 2) / sxx)
    return FitDiagnostics(
        radii=list(radii),
        slope=float(slope),
        intercept=float(intercept),
        residuals=[float(r) for r in residuals],
        stderr=stderr,
    )


def growth_exponent(census: CensusTable) -> Tuple[float, FitDiagnostics]:
    """
    临界指数估计：log N(o, n) 对 n 在最大的一半半径上的斜率

    拟合窗口内球面计数为常数时球至多线性增长，指数记为 0 并标记为退化。

    Raises:
        ValueError: 半径少于4个
    """
    if len(census.radii) < 4:
        raise ValueError("增长指数估计至少需要4个半径")

    half = math.ceil(len(census.radii) / 2)
    radii = census.radii[-half:]
    spheres = {census.sphere_counts[census.radii.index(n)] for n in radii}
    if len(spheres) == 1:
        logger.warning(f"半径 {radii[0]}..{radii[-1]} 上球面计数恒为 {spheres.pop()}，增长指数记为0")
        return 0.0, FitDiagnostics(list(radii), 0.0, 0.0, [], 0.0, degenerate=True,
                                   notes=["constant sphere counts: at most linear ball growth"])

    values = [census.ball_counts[census.radii.index(n)] for n in radii]
    diagnostics = fit_log_linear(radii, values)
    if diagnostics.slope <= FIT_TOLERANCE:
        diagnostics.degenerate = True
        diagnostics.notes.append("non-positive slope")
    logger.info(f"增长指数估计: δ̂={diagnostics.slope:.6f} ± {diagnostics.stderr:.2e} (半径 {radii[0]}..{radii[-1]})")
    return diagnostics.slope, diagnostics

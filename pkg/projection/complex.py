"""
投影复形 P_K(X) 的有限窗口截断

顶点为 t·Ax(f)(t ∈ N(o, window)，按陪集 t·E(f) 去重)，X1 与 X2 相邻当且仅当
窗口内没有第三个顶点 W 使 π_W(X1, X2) = diam π_W(X1 ∪ X2) ≥ K。
"""

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx

from common.budget import Budget
from census.enumeration import ball_words
from geometry.axis import AxisSet, set_diameter
from geometry.contracting import distinct_translates
from groups.elementary import elementary_subgroup
from groups.models import DomainError, Element, GroupModel

logger = logging.getLogger(__name__)


class WindowError(RuntimeError):
    """窗口不包含所需的平移顶点"""
    pass


class ProjectionComplexGraph:
    """
    窗口内的投影复形

    images[w][x] 为 π_{X_w}(X_x) 的最近点集合；pair_max[(i, j)] 为 max_W π_W(X_i, X_j)。
    """

    def __init__(self, f: Element, k: int, window_radius: int, vertices: List[AxisSet],
                 images: List[Dict[int, FrozenSet[bytes]]]):
        if k <= 0:
            raise ValueError("K 必须为正")
        self.f = f
        self.model = f.model
        self.k = k
        self.window_radius = window_radius
        self.vertices = vertices
        self.images = images
        self.index = {axis.key: i for i, axis in enumerate(vertices)}
        self.pair_max = self._pair_maxima()
        self.graph = self._assemble(k)
        self.distances: Dict[int, Dict[int, int]] = dict(nx.all_pairs_shortest_path_length(self.graph))

    def projection(self, w: int, x1: int, x2: int) -> int:
        """π_W(X1, X2)"""
        return set_diameter(self.model, self.images[w][x1] | self.images[w][x2])

    def _pair_maxima(self) -> Dict[Tuple[int, int], int]:
        size = len(self.vertices)
        maxima = {}
        for i in range(size):
            for j in range(i + 1, size):
                maxima[(i, j)] = max((self.projection(w, i, j) for w in range(size) if w not in (i, j)),
                                     default=0)
        return maxima

    def _assemble(self, k: int) -> nx.Graph:
        graph = nx.Graph()
        for i, axis in enumerate(self.vertices):
            graph.add_node(i, label=self.label(i))
        graph.add_edges_from(pair for pair, value in self.pair_max.items() if value < k)
        return graph

    def with_k(self, k: int) -> "ProjectionComplexGraph":
        """复用投影数据换一个 K"""
        return ProjectionComplexGraph(self.f, k, self.window_radius, self.vertices, self.images)

    def label(self, i: int) -> str:
        axis = self.vertices[i]
        return f"{self.model.format_word(axis.key[1][1])}·Ax({axis.root})"

    def adjacent(self, i: int, j: int) -> bool:
        return self.graph.has_edge(i, j)

    def distance(self, i: int, j: int) -> Optional[int]:
        """图距离；不连通时为 None"""
        return self.distances.get(i, {}).get(j)

    def locate(self, axis: AxisSet) -> Optional[int]:
        return self.index.get(axis.key)

    def is_connected(self) -> bool:
        return len(self.vertices) <= 1 or nx.is_connected(self.graph)

    def to_dict(self) -> Dict:
        return {
            "f": str(self.f),
            "K": self.k,
            "window": self.window_radius,
            "vertices": [self.label(i) for i in range(len(self.vertices))],
            "edges": sorted(self.graph.edges()),
            "connected": self.is_connected(),
        }


def _projection_images(vertices: List[AxisSet], reach: int, shards: int) -> List[Dict[int, FrozenSet[bytes]]]:
    """每个顶点 W 上其余顶点的投影像；各 W 之间相互独立"""
    point_sets = []
    for axis in vertices:
        axis.materialize(reach)
        point_sets.append([w for w in axis.point_words() if len(w) <= reach])

    def run(w: int) -> Dict[int, FrozenSet[bytes]]:
        target = vertices[w]
        images = {}
        for x, words in enumerate(point_sets):
            if x == w:
                continue
            image = set()
            for p in words:
                image.update(target.project_word(p, auto_widen=True)[0])
            images[x] = frozenset(image)
        return images

    if shards <= 1:
        return [run(w) for w in range(len(vertices))]
    with ThreadPoolExecutor(max_workers=shards) as executor:
        return list(executor.map(run, range(len(vertices))))


def build_complex(model: GroupModel, f: Element, k: int, window_radius: int,
                  shards: int = 1, budget: Optional[Budget] = None) -> ProjectionComplexGraph:
    """
    构造窗口投影复形

    Raises:
        DomainError: f 不是非挠元素
        ValueError: K ≤ 0
        BudgetExceededError: 超出预算
    """
    if k <= 0:
        raise ValueError("K 必须为正")
    if window_radius < 0:
        raise ValueError("窗口半径必须非负")
    if f.model != model:
        raise ValueError("元素属于其他模型")
    if f.is_identity() or f.is_torsion():
        raise DomainError(f"{f} 不是非挠元素")

    vertices = distinct_translates(f, window_radius, budget)
    reach = 2 * window_radius + 2 * len(f) + 2
    images = _projection_images(vertices, reach, shards)
    complex_graph = ProjectionComplexGraph(f, k, window_radius, vertices, images)
    logger.info(f"投影复形 f={f}, K={k}, 窗口 {window_radius}: "
                f"{len(vertices)} 个顶点, {complex_graph.graph.number_of_edges()} 条边")
    return complex_graph


def interval_set(complex_graph: ProjectionComplexGraph, v: int, w: int, k: Optional[int] = None) -> List[int]:
    """
    X_K(V, W) = {X : π_X(V, W) ≥ K}，X 取遍窗口中其余顶点

    Raises:
        ValueError: V = W
    """
    if v == w:
        raise ValueError("区间集需要两个不同的顶点")
    k = complex_graph.k if k is None else k
    return [x for x in range(len(complex_graph.vertices))
            if x not in (v, w) and complex_graph.projection(x, v, w) >= k]


def default_k(complex_graph: ProjectionComplexGraph) -> int:
    """使窗口图连通的最小 K"""
    for k in sorted({value + 1 for value in complex_graph.pair_max.values()} | {1}):
        edges = [pair for pair, value in complex_graph.pair_max.items() if value < k]
        graph = nx.Graph()
        graph.add_nodes_from(range(len(complex_graph.vertices)))
        graph.add_edges_from(edges)
        if graph.number_of_nodes() <= 1 or nx.is_connected(graph):
            return k
    return 1


def export_adjacency(complex_graph: ProjectionComplexGraph) -> Tuple[str, Dict]:
    """纯文本邻接表与 JSON 元数据"""
    text = "\n".join(nx.generate_adjlist(complex_graph.graph)) + "\n"
    metadata = {
        "K": complex_graph.k,
        "window": complex_graph.window_radius,
        "f": str(complex_graph.f),
        "labels": {str(i): complex_graph.label(i) for i in range(len(complex_graph.vertices))},
    }
    return text, metadata


@dataclass
class WindowStability:
    k: int
    window: int
    compared: int
    disagreements: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return not self.disagreements

    def to_dict(self) -> Dict:
        return {"K": self.k, "window": self.window, "compared": self.compared,
                "stable": self.stable, "disagreements": [list(p) for p in self.disagreements]}


def window_stability(model: GroupModel, f: Element, k: int, window_radius: int,
                     shards: int = 1) -> WindowStability:
    """窗口扩大 1 后，内窗口顶点对的相邻关系是否不变"""
    inner = build_complex(model, f, k, window_radius, shards)
    outer = build_complex(model, f, k, window_radius + 1, shards)
    compared = 0
    disagreements = []
    size = len(inner.vertices)
    for i in range(size):
        for j in range(i + 1, size):
            oi, oj = outer.locate(inner.vertices[i]), outer.locate(inner.vertices[j])
            compared += 1
            if inner.adjacent(i, j) != outer.adjacent(oi, oj):
                disagreements.append((inner.label(i), inner.label(j)))
    if disagreements:
        logger.warning(f"窗口 {window_radius} 存在边界效应: {len(disagreements)} 对相邻关系改变")
    return WindowStability(k, window_radius, compared, disagreements)


@dataclass
class LoxodromicReport:
    g: str
    base: str
    k_prime: int
    distances: List[Optional[int]]

    @property
    def evidence(self) -> bool:
        return any(d is not None and d > self.k_prime for d in self.distances)

    @property
    def verdict(self) -> str:
        return "loxodromic evidence" if self.evidence else "criterion not triggered"

    def to_dict(self) -> Dict:
        return {"g": self.g, "base": self.base, "K_prime": self.k_prime,
                "distances": self.distances, "verdict": self.verdict}


def loxodromic_test(g: Element, complex_graph: ProjectionComplexGraph, n_max: int, k_prime: int,
                    base: Optional[int] = None) -> LoxodromicReport:
    """
    N = 0..n_max 时的 d_P(g^{-N}X, g^N X)；超过 K' 视为斜驶证据

    Raises:
        WindowError: g^{±N}X 不在窗口中
    """
    if n_max < 0:
        raise ValueError("N 必须非负")
    if base is None:
        base = complex_graph.locate(AxisSet(complex_graph.f))
        if base is None:
            raise WindowError("窗口中没有基顶点 Ax(f)")
    axis = complex_graph.vertices[base]

    distances: List[Optional[int]] = []
    for n in range(n_max + 1):
        if n == 0:
            distances.append(0)
            continue
        forward = complex_graph.locate(axis.translated(g ** n))
        backward = complex_graph.locate(axis.translated(g ** -n))
        if forward is None or backward is None:
            raise WindowError(f"窗口 {complex_graph.window_radius} 不包含 g^±{n}·X")
        distances.append(0 if forward == backward else complex_graph.distance(backward, forward))

    report = LoxodromicReport(str(g), complex_graph.label(base), k_prime, distances)
    logger.info(f"斜驶测试 g={g}: d_P 序列 {distances}, {report.verdict}")
    return report


@dataclass
class AcylindricityTable:
    d: int
    mover_radius: int
    pairs: int
    counts: Dict[int, int]

    def to_dict(self) -> Dict:
        return {"D": self.d, "mover_radius": self.mover_radius, "pairs": self.pairs,
                "N": {str(r): n for r, n in sorted(self.counts.items())}}


def mover_action(complex_graph: ProjectionComplexGraph, h: Element) -> List[Optional[int]]:
    """h 在窗口顶点上的作用；像落在窗口外时为 None"""
    return [complex_graph.locate(axis.translated(h)) for axis in complex_graph.vertices]


def movers_fixing_pair(complex_graph: ProjectionComplexGraph, actions: Sequence[List[Optional[int]]],
                       x: int, y: int, d: int) -> int:
    """#{h : d(x, hx) ≤ D 且 d(y, hy) ≤ D}"""
    count = 0
    for action in actions:
        hx, hy = action[x], action[y]
        if hx is None or hy is None:
            continue
        dx = complex_graph.distance(x, hx)
        dy = complex_graph.distance(y, hy)
        if dx is not None and dy is not None and dx <= d and dy <= d:
            count += 1
    return count


def acylindricity_probe(complex_graph: ProjectionComplexGraph, d: int, radii: Sequence[int],
                        sample_size: int = 200, seed: int = 0, mover_radius: int = 2) -> AcylindricityTable:
    """
    经验 N(D, R)：在 d_P(x, y) > R 的抽样点对上，同时移动 x、y 不超过 D 的群元素个数的最大值

    Raises:
        ValueError: R 不为正
    """
    if any(r <= 0 for r in radii):
        raise ValueError("R 必须为正")
    model = complex_graph.model
    movers = [Element(model, w) for w in ball_words(model, mover_radius)]
    actions = [mover_action(complex_graph, h) for h in movers]

    size = len(complex_graph.vertices)
    pairs = [(i, j) for i in range(size) for j in range(i + 1, size)
             if complex_graph.distance(i, j) is not None]
    if len(pairs) > sample_size:
        pairs = sorted(random.Random(seed).sample(pairs, sample_size))

    per_pair = {pair: movers_fixing_pair(complex_graph, actions, pair[0], pair[1], d) for pair in pairs}
    counts = {}
    for r in radii:
        eligible = [n for (i, j), n in per_pair.items() if complex_graph.distance(i, j) > r]
        counts[r] = max(eligible, default=0)
    logger.info(f"非柱性探测 D={d}: {counts}")
    return AcylindricityTable(d, mover_radius, len(pairs), counts)


@dataclass
class KernelBound:
    max_kernel: int
    checked: int
    skipped_torsion: int
    search_radius: int

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


def kernel_bound_probe(model: GroupModel, sample_elements: Sequence[Element], search_radius: int) -> KernelBound:
    """抽样非挠元素的有限核 F 的最大阶；挠元素被跳过"""
    max_kernel = 0
    checked = skipped = 0
    for g in sample_elements:
        if g.is_identity() or g.is_torsion():
            skipped += 1
            continue
        report = elementary_subgroup(g, search_radius)
        max_kernel = max(max_kernel, len(report.kernel_elements))
        checked += 1
    logger.info(f"核大小探测 {model.describe()}: {checked} 个元素, max|F|={max_kernel}")
    return KernelBound(max_kernel, checked, skipped, search_radius)

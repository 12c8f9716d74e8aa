"""
周期可容许路径：构造与校验

对 g = t1·f^m·t2，取 X_i = g^i·t1·Ax(f)，p_0 为 g 的平移轴落在 X_0 凸包中的最长一段，
q_0 = [p_0 末端, g·p_0 起点]，其余各段由 g 的幂平移得到。
连接段的投影条件相对轨道 X_i 计算；p_i 的位置与入口、出口偏差相对凸包计算。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from geometry.axis import AxisSet, GeodesicPath, projection_diameter, translation_axis, word_distance
from groups.models import DomainError, Element, conjugacy_canonical

logger = logging.getLogger(__name__)


class AdmissibleConstructionError(ValueError):
    """给定 m 无法达到长度下界 D"""
    pass


@dataclass
class AdmissiblePathWitness:
    """
    窗口 i ∈ [-window, window] 内的各段 p_i ⊂ X_i 与连接段 q_i
    """
    g: Element
    d: int
    tau: int
    window: int
    p: Dict[int, GeodesicPath]
    q: Dict[int, GeodesicPath]
    axes: Dict[int, AxisSet]
    parameters: Dict = field(default_factory=dict)

    def indices(self) -> List[int]:
        return list(range(-self.window, self.window + 1))

    def to_dict(self) -> Dict:
        model = self.g.model
        return {
            "g": str(self.g),
            "D": self.d,
            "tau": self.tau,
            "window": self.window,
            "p0": {"start": model.format_word(self.p[0].start), "letters": model.format_word(self.p[0].letters)},
            "q0": {"start": model.format_word(self.q[0].start), "letters": model.format_word(self.q[0].letters)},
            "len_p0": self.p[0].length,
            "len_q0": self.q[0].length,
            "parameters": self.parameters,
        }


def _overlap(line: List[bytes], axis: AxisSet) -> Tuple[int, int]:
    """line 中落在 axis 凸包上的最长连续顶点段 [i, j]"""
    best = (0, -1)
    start = None
    for k, v in enumerate(line + [None]):
        if v is not None and axis.hull_contains_word(v):
            if start is None:
                start = k
        elif start is not None:
            if k - 1 - start > best[1] - best[0]:
                best = (start, k - 1)
            start = None
    return best


def build_admissible_witness(t1: Element, f: Element, m: int, t2: Element,
                             d: Optional[int] = None, tau: Optional[int] = None,
                             window: int = 1) -> AdmissiblePathWitness:
    """
    为 g = t1·f^m·t2 构造周期 (g, D, τ)-可容许路径

    Args:
        d: 长度下界 D，默认 |f|
        tau: 连接段投影上界，默认 |f|
        window: 窗口半宽，至少为 1(三个周期)

    Raises:
        DomainError: f 或 g 不是非挠元素
        AdmissibleConstructionError: |f^m| < D，或平移轴与 X_0 的重叠短于 D
    """
    model = f.model
    if f.is_identity() or f.is_torsion():
        raise DomainError(f"{f} 不是非挠元素")
    if window < 1:
        raise ValueError("窗口至少包含三个周期")
    d = len(f) if d is None else d
    tau = len(f) if tau is None else tau
    if d < 1 or tau < 0:
        raise ValueError("D 必须为正，τ 必须非负")

    f_power = f ** m
    if len(f_power) < d:
        raise AdmissibleConstructionError(f"条件(1)无法满足: |f^{m}| = {len(f_power)} < D = {d}")

    g = t1 * f_power * t2
    if g.is_identity() or g.is_torsion():
        raise DomainError(f"g = {g} 不是非挠元素")
    period = conjugacy_canonical(g).tau

    x0 = AxisSet(f, translate=t1)
    periods = (len(t1) + len(t2) + len(f_power)) // period + 2
    line_path = translation_axis(g, periods)
    line = line_path.vertex_words()
    i, j = _overlap(line, x0)
    if j - i < d:
        raise AdmissibleConstructionError(f"平移轴与 X_0 的重叠长度 {j - i} < D = {d}")

    if j - i >= period or (i == 0 and j == len(line) - 1):
        # g·X_0 与 X_0 在轴上重叠至少一个周期：取 p_0 为一整个周期
        i = periods * period if (i == 0 and j == len(line) - 1) else i
        j = i + period
        infinite = True
    else:
        infinite = False

    p0 = GeodesicPath(model, line[i], line_path.letters[i:j])
    gx = model.mul_words(g.word, p0.start)
    q0 = GeodesicPath(model, p0.end, model.mul_words(model.inv_word(p0.end), gx))

    p, q, axes = {}, {}, {}
    for k in range(-window, window + 2):
        shift = g ** k
        axes[k] = x0.translated(shift)
        if k <= window:
            p[k] = p0.translate(shift.word)
            q[k] = q0.translate(shift.word)

    logger.info(f"可容许路径 g={g}: len(p_0)={p0.length}, len(q_0)={q0.length}, τ[g]={period}")
    return AdmissiblePathWitness(
        g=g, d=d, tau=tau, window=window, p=p, q=q, axes=axes,
        parameters={"t1": str(t1), "f": str(f), "m": m, "t2": str(t2), "axis_overlap_full_period": infinite},
    )


@dataclass
class AdmissibleValidation:
    """各条件的通过情况与测得的 ε、R"""
    length_condition: bool
    projection_condition: bool
    periodicity_condition: bool
    on_axis_condition: bool
    measured_epsilon: int
    measured_r: int
    stable_length: int
    max_connector_projection: int
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.length_condition and self.projection_condition
                and self.periodicity_condition and self.on_axis_condition)

    def to_dict(self) -> Dict:
        data = dict(self.__dict__)
        data["passed"] = self.passed
        return data


def validate_admissible(witness: AdmissiblePathWitness, contraction: int = 0) -> AdmissibleValidation:
    """
    逐条校验：(1) len(p_i) ≥ D；(2) q_i 到 X_i, X_{i+1} 的投影直径 ≤ τ；(3) 周期性与首尾相接；
    并在轴上测量入口/出口偏差 ε 与 |τ[g] − len(p_0) − len(q_0)|

    Args:
        contraction: 判定入口/出口时使用的邻域半径 C
    """
    if witness.window < 1:
        raise ValueError("窗口至少包含三个周期")
    g = witness.g
    model = g.model
    failures = []

    length_ok = all(witness.p[i].length >= witness.d for i in witness.indices())
    if not length_ok:
        failures.append("condition (1): len(p_i) < D")

    max_projection = 0
    for i in witness.indices():
        vertices = witness.q[i].vertex_words()
        for axis in (witness.axes[i], witness.axes[i + 1]):
            max_projection = max(max_projection, projection_diameter(vertices, axis))
    projection_ok = max_projection <= witness.tau
    if not projection_ok:
        failures.append(f"condition (2): connector projection {max_projection} > tau {witness.tau}")

    periodic_ok = True
    for i in witness.indices():
        shift = (g ** i).word
        if witness.p[i] != witness.p[0].translate(shift) or witness.q[i] != witness.q[0].translate(shift):
            periodic_ok = False
        if witness.p[i].end != witness.q[i].start:
            periodic_ok = False
        if i + 1 in witness.p and witness.q[i].end != witness.p[i + 1].start:
            periodic_ok = False
    if not periodic_ok:
        failures.append("condition (3): q_i p_i != g^i (q_0 p_0)")

    on_axis_ok = all(witness.axes[i].hull_contains_word(v)
                     for i in witness.indices() for v in witness.p[i].vertex_words())
    if not on_axis_ok:
        failures.append("p_i not contained in X_i")

    stable_length = conjugacy_canonical(g).tau
    measured_r = abs(stable_length - witness.p[0].length - witness.q[0].length)
    measured_epsilon = _entry_exit_deviation(witness, contraction)

    return AdmissibleValidation(
        length_condition=length_ok,
        projection_condition=projection_ok,
        periodicity_condition=periodic_ok,
        on_axis_condition=on_axis_ok,
        measured_epsilon=measured_epsilon,
        measured_r=measured_r,
        stable_length=stable_length,
        max_connector_projection=max_projection,
        failures=failures,
    )


def _entry_exit_deviation(witness: AdmissiblePathWitness, contraction: int) -> int:
    """g 的轴进入 N_C(X_0) 的入口、出口点与 p_0 两端的距离；轴整段落在邻域内时记为0"""
    g = witness.g
    model = g.model
    period = max(conjugacy_canonical(g).tau, 1)
    p0 = witness.p[0]
    periods = (len(p0.start) + p0.length + witness.q[0].length) // period + 2
    line = translation_axis(g, periods).vertex_words()
    axis = witness.axes[0]
    inside = [k for k, v in enumerate(line) if axis.distance_to_word(v, hull=True) <= contraction]
    if not inside or (inside[0] == 0 and inside[-1] == len(line) - 1):
        return 0
    entry, exit_ = line[inside[0]], line[inside[-1]]
    return max(word_distance(model, entry, p0.start), word_distance(model, exit_, p0.end))

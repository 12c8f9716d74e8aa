"""
极大初等子群 E(g) 的有界搜索
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

from groups.models import DomainError, Element, exact_root

logger = logging.getLogger(__name__)


@dataclass
class ElementaryGroupReport:
    """E(g) 的有限数据：根生成元、有限核 F 与定向指数 [E : E⁺]"""
    element: Element
    root_generator: Element
    exponent: int
    kernel_elements: List[Element]
    orientation_index: int
    flip_element: Optional[Element]
    search_radius: int

    @property
    def strongly_primitive(self) -> bool:
        """g 在 E⁺(g) → Z 下映到 ±1"""
        return self.exponent == 1

    def to_dict(self) -> Dict:
        return {
            "element": str(self.element),
            "root_generator": str(self.root_generator),
            "exponent": self.exponent,
            "kernel_elements": [str(k) for k in self.kernel_elements],
            "orientation_index": self.orientation_index,
            "flip_element": None if self.flip_element is None else str(self.flip_element),
            "strongly_primitive": self.strongly_primitive,
            "search_radius": self.search_radius,
        }


def elementary_subgroup(g: Element, search_radius: int) -> ElementaryGroupReport:
    """
    在 |h| ≤ search_radius 中搜索满足 h g^n h⁻¹ = g^{±n}(n ≤ search_radius)的 h

    Args:
        g: 非挠元素
        search_radius: 搜索半径

    Returns:
        ElementaryGroupReport；核为符号为 + 的命中中有限阶的元素(总含单位元)

    Raises:
        DomainError: 单位元或挠元素
        ValueError: 搜索半径不为正
    """
    from census.enumeration import ball_words

    if search_radius < 1:
        raise ValueError("搜索半径必须为正")
    if g.is_identity() or g.is_torsion():
        raise DomainError(f"{g} 是单位元或挠元素，E(g) 无定义")

    model = g.model
    root, exponent = exact_root(g)
    positive = [model.pow_word(g.word, n) for n in range(1, search_radius + 1)]
    negative = [model.inv_word(p) for p in positive]

    kernel: List[Element] = []
    flip: Optional[Element] = None
    for h in ball_words(model, search_radius):
        conjugate = model.mul_words(model.mul_words(h, g.word), model.inv_word(h))
        power = b""
        sign = 0
        for n in range(search_radius):
            power = model.mul_words(power, conjugate)
            if power == positive[n]:
                sign = 1
                break
            if power == negative[n]:
                sign = -1
                break
        if sign == 1:
            if not h or model.is_torsion_word(h):
                kernel.append(Element(model, h))
        elif sign == -1 and flip is None:
            flip = Element(model, h)

    if not any(k.is_identity() for k in kernel):
        kernel.insert(0, model.identity())

    report = ElementaryGroupReport(
        element=g,
        root_generator=root,
        exponent=exponent,
        kernel_elements=kernel,
        orientation_index=2 if flip is not None else 1,
        flip_element=flip,
        search_radius=search_radius,
    )
    logger.debug(f"E({g}): 根={root}, |F|={len(kernel)}, 指数={report.orientation_index}")
    return report

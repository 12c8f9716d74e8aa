"""
群模型
自由群 F_k 与有限循环群自由积的精确代数和字度量几何：
规范形、乘法、测地线、循环约化、共轭规范代表、本原根
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from common.constants import ModelKind
from common.protocol import WordProtocol, ProtocolError

logger = logging.getLogger(__name__)

_FREE_NAMES = "abcdefghijklmnopqrstuvwxyz"
_FACTOR_NAMES = "stuvwxyzabcdefghijklmnopqr"


class ModelMismatchError(ValueError):
    """元素属于不同的群模型"""
    pass


class DomainError(ValueError):
    """输入不在运算定义域内(如挠元素没有本原根)"""
    pass


class GroupModel:
    """
    可精确计算的群模型

    字母用 0..L-1 的整数编码，字存为 bytes，字节序即字母表全序。
    自由群: 字母 2i 为 a_i，2i+1 为 a_i⁻¹，顺序 a < a⁻¹ < b < b⁻¹ ...
    自由积: 字母为 (因子, 幂) 对，幂取 1..m-1，按因子再按幂排序。
    """

    def __init__(self,
                 kind: str,
                 rank: int = 0,
                 orders: Sequence[int] = (),
                 alphabet: Optional[Sequence[str]] = None,
                 allow_elementary: bool = False):
        """
        初始化群模型

        Args:
            kind: ModelKind.FREE 或 ModelKind.FREE_PRODUCT
            rank: 自由群的秩
            orders: 自由积各因子的阶
            alphabet: 生成元名称(单个小写字母)，默认自由群从 a 开始，自由积从 s 开始
            allow_elementary: 是否允许秩1自由群(仅用于退化测试)

        Raises:
            ValueError: 参数不合法或群是初等群时
        """
        if kind == ModelKind.FREE:
            if rank < 1 or (rank < 2 and not allow_elementary):
                raise ValueError("自由群的秩必须至少为2(秩1为初等群)")
            generators = rank
            orders = ()
        elif kind == ModelKind.FREE_PRODUCT:
            orders = tuple(int(m) for m in orders)
            if len(orders) < 2:
                raise ValueError("自由积至少需要两个因子")
            if any(m < 2 for m in orders):
                raise ValueError("因子的阶必须至少为2")
            if sorted(orders) == [2, 2]:
                raise ValueError("Z/2 * Z/2 是初等群，不支持")
            generators = len(orders)
            rank = 0
        else:
            raise ValueError(f"未知的模型类型: {kind}")

        default_names = _FREE_NAMES if kind == ModelKind.FREE else _FACTOR_NAMES
        if alphabet is None:
            if generators > len(default_names):
                raise ValueError("生成元数量超过可用字母数")
            alphabet = list(default_names[:generators])
        alphabet = list(alphabet)
        if len(alphabet) != generators:
            raise ValueError(f"字母表长度 {len(alphabet)} 与生成元数量 {generators} 不一致")
        if len(set(alphabet)) != len(alphabet) or any(not re.fullmatch(r"[a-z]", x) for x in alphabet):
            raise ValueError("字母表必须由互不相同的单个小写字母组成")

        self.kind = kind
        self.rank = rank
        self.orders = orders
        self.alphabet = tuple(alphabet)
        self.allow_elementary = allow_elementary
        self._build_tables()

        logger.debug(f"群模型初始化: {self.describe()}, 字母数={self.letter_count}")

    # ------------------------------------------------------------------
    # 构造
    # ------------------------------------------------------------------
    @classmethod
    def free(cls, rank: int, alphabet: Optional[Sequence[str]] = None,
             allow_elementary: bool = False) -> "GroupModel":
        return cls(ModelKind.FREE, rank=rank, alphabet=alphabet, allow_elementary=allow_elementary)

    @classmethod
    def free_product(cls, orders: Sequence[int], alphabet: Optional[Sequence[str]] = None) -> "GroupModel":
        return cls(ModelKind.FREE_PRODUCT, orders=orders, alphabet=alphabet)

    @classmethod
    def from_spec(cls, spec: str, alphabet: Optional[Sequence[str]] = None,
                  allow_elementary: bool = False) -> "GroupModel":
        """
        从文本描述构造模型

        Args:
            spec: "free(2)" 或 "free-product(2,3)"
        """
        match = re.fullmatch(r"\s*(free|free-product)\s*\(([\d,\s]+)\)\s*", spec or "")
        if match is None:
            raise ValueError(f"无法解析的模型描述: {spec!r}")
        kind, args = match.groups()
        numbers = [int(x) for x in args.split(",") if x.strip()]
        if kind == ModelKind.FREE:
            if len(numbers) != 1:
                raise ValueError("free(k) 只接受一个参数")
            return cls.free(numbers[0], alphabet=alphabet, allow_elementary=allow_elementary)
        return cls.free_product(numbers, alphabet=alphabet)

    def _build_tables(self):
        """预计算字母表、逆字母和后继表"""
        if self.kind == ModelKind.FREE:
            self.letter_count = 2 * self.rank
            self.factor_of = [x // 2 for x in range(self.letter_count)]
            self.power_of = [1 if x % 2 == 0 else -1 for x in range(self.letter_count)]
            self.inverse_letter = [x ^ 1 for x in range(self.letter_count)]
        else:
            self.factor_of = []
            self.power_of = []
            self._letter_index: Dict[Tuple[int, int], int] = {}
            for factor, order in enumerate(self.orders):
                for power in range(1, order):
                    self._letter_index[(factor, power)] = len(self.factor_of)
                    self.factor_of.append(factor)
                    self.power_of.append(power)
            self.letter_count = len(self.factor_of)
            self.inverse_letter = [
                self._letter_index[(f, self.orders[f] - p)] for f, p in zip(self.factor_of, self.power_of)
            ]
        if self.letter_count > 255:
            raise ValueError("字母数过多")

        # followers[x] 为可以接在 x 后面的字母(按字母序)；followers[-1] 为首字母
        self.followers: Dict[int, bytes] = {}
        for x in range(self.letter_count):
            self.followers[x] = bytes(y for y in range(self.letter_count) if not self.interacts(x, y))
        self.followers[-1] = bytes(range(self.letter_count))

    # ------------------------------------------------------------------
    # 基本属性
    # ------------------------------------------------------------------
    @property
    def is_free(self) -> bool:
        return self.kind == ModelKind.FREE

    @property
    def key(self) -> Tuple:
        return (self.kind, self.rank, self.orders, self.alphabet)

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupModel) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"GroupModel({self.describe()})"

    def describe(self) -> str:
        if self.is_free:
            return f"free({self.rank})"
        return "free-product(" + ",".join(str(m) for m in self.orders) + ")"

    def interacts(self, x: int, y: int) -> bool:
        """y 不能直接接在 x 之后(自由群: 互逆；自由积: 同一因子)"""
        if self.is_free:
            return y == self.inverse_letter[x]
        return self.factor_of[x] == self.factor_of[y]

    def letter_token(self, x: int) -> Tuple[str, int]:
        """字母对应的 (名称, 指数)"""
        return self.alphabet[self.factor_of[x]], self.power_of[x]

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "rank": self.rank, "orders": list(self.orders),
                "alphabet": list(self.alphabet), "letters": self.letter_count}

    # ------------------------------------------------------------------
    # 字上的运算(内部热路径使用 bytes)
    # ------------------------------------------------------------------
    def _combine(self, x: int, y: int) -> Optional[int]:
        """同一因子的两个字母相乘，结果为单位元时返回 None"""
        factor = self.factor_of[x]
        power = (self.power_of[x] + self.power_of[y]) % self.orders[factor]
        if power == 0:
            return None
        return self._letter_index[(factor, power)]

    def reduce_letters(self, letters: Sequence[int]) -> bytes:
        """
        将任意字母序列化为规范形

        Raises:
            ValueError: 字母编号越界时
        """
        stack = bytearray()
        for x in letters:
            if not 0 <= x < self.letter_count:
                raise ValueError(f"字母编号越界: {x}")
            if stack and self.interacts(stack[-1], x):
                top = stack.pop()
                if not self.is_free:
                    merged = self._combine(top, x)
                    if merged is not None:
                        stack.append(merged)
            else:
                stack.append(x)
        return bytes(stack)

    def mul_words(self, u: bytes, v: bytes) -> bytes:
        """两个规范形相乘"""
        inverse = self.inverse_letter
        i = 0
        limit = min(len(u), len(v))
        while i < limit and u[len(u) - 1 - i] == inverse[v[i]]:
            i += 1
        left = u[:len(u) - i]
        right = v[i:]
        if not self.is_free and left and right and self.factor_of[left[-1]] == self.factor_of[right[0]]:
            merged = self._combine(left[-1], right[0])
            return left[:-1] + bytes([merged]) + right[1:]
        return left + right

    def inv_word(self, w: bytes) -> bytes:
        inverse = self.inverse_letter
        return bytes(inverse[x] for x in reversed(w))

    def pow_word(self, w: bytes, n: int) -> bytes:
        """快速幂"""
        if n < 0:
            w, n = self.inv_word(w), -n
        result = b""
        base = w
        while n:
            if n & 1:
                result = self.mul_words(result, base)
            n >>= 1
            if n:
                base = self.mul_words(base, base)
        return result

    def cyclic_reduce_word(self, w: bytes) -> Tuple[bytes, bytes]:
        """
        循环约化

        Returns:
            (core, conjugator)，满足 w = conjugator · core · conjugator⁻¹
        """
        inverse = self.inverse_letter
        n = len(w)
        k = 0
        while 2 * k + 1 < n and w[k] == inverse[w[n - 1 - k]]:
            k += 1
        core = w[k:n - k]
        conjugator = w[:k]
        if not self.is_free and len(core) >= 2 and self.factor_of[core[0]] == self.factor_of[core[-1]]:
            # x w y 与 x 同因子：x⁻¹ (x w y) x = w · (y x)
            first = core[0]
            merged = self._combine(core[-1], first)
            core = core[1:-1] + bytes([merged])
            conjugator = conjugator + bytes([first])
        return core, conjugator

    def is_torsion_word(self, w: bytes) -> bool:
        """非单位元且有限阶"""
        if not w:
            return False
        core, _ = self.cyclic_reduce_word(w)
        return not self.is_free and len(core) == 1

    def is_cyclically_reduced(self, w: bytes) -> bool:
        return len(w) < 2 or not self.interacts(w[-1], w[0])

    # ------------------------------------------------------------------
    # 元素层面的接口
    # ------------------------------------------------------------------
    def identity(self) -> "Element":
        return Element(self, b"")

    def generators(self) -> List["Element"]:
        """度量生成集(自由群: a_i^{±1}；自由积: 所有非平凡因子元素)"""
        return [Element(self, bytes([x])) for x in range(self.letter_count)]

    def element(self, letters: Sequence[int]) -> "Element":
        return Element(self, self.reduce_letters(letters))

    def normalize(self, raw: str) -> "Element":
        """
        解析记号串并化为规范形

        Args:
            raw: 如 "a b b'" 或 "s t t"

        Raises:
            ProtocolError: 记号不合法或含有未知字母时
        """
        if raw.strip() == "e" and "e" not in self.alphabet:
            return self.identity()
        letters: List[int] = []
        for name, exponent, explicit_power in WordProtocol.parse_tokens(raw):
            if name not in self.alphabet:
                raise ProtocolError(f"未知字母: {name!r}，字母表为 {list(self.alphabet)}")
            index = self.alphabet.index(name)
            if self.is_free:
                if explicit_power:
                    raise ProtocolError("自由群记号不接受 ^k 幂后缀")
                letters.append(2 * index + (0 if exponent > 0 else 1))
                continue
            power = exponent % self.orders[index]
            if power:
                letters.append(self._letter_index[(index, power)])
        return Element(self, self.reduce_letters(letters))

    def parse(self, raw: str) -> "Element":
        return self.normalize(raw)

    def format_word(self, w: bytes, ascii_inverse: bool = True) -> str:
        tokens = [self.letter_token(x) for x in w]
        return WordProtocol.format_tokens(tokens, ascii_inverse=ascii_inverse)

    def multiply(self, g: "Element", h: "Element") -> "Element":
        self._check(g)
        self._check(h)
        return Element(self, self.mul_words(g.word, h.word))

    def invert(self, g: "Element") -> "Element":
        self._check(g)
        return Element(self, self.inv_word(g.word))

    def _check(self, g: "Element"):
        if g.model != self:
            raise ModelMismatchError(f"元素属于 {g.model.describe()}，而不是 {self.describe()}")


@dataclass(frozen=True)
class Element:
    """
    规范形元素；length = d(o, g·o)
    """
    model: GroupModel
    word: bytes

    @property
    def length(self) -> int:
        return len(self.word)

    def __len__(self) -> int:
        return len(self.word)

    def __mul__(self, other: "Element") -> "Element":
        if not isinstance(other, Element):
            return NotImplemented
        if other.model != self.model:
            raise ModelMismatchError("不同模型的元素不能相乘")
        return Element(self.model, self.model.mul_words(self.word, other.word))

    def __pow__(self, n: int) -> "Element":
        return Element(self.model, self.model.pow_word(self.word, n))

    def inverse(self) -> "Element":
        return Element(self.model, self.model.inv_word(self.word))

    def is_identity(self) -> bool:
        return not self.word

    def is_torsion(self) -> bool:
        return self.model.is_torsion_word(self.word)

    def sort_key(self) -> Tuple[int, bytes]:
        """短字典序"""
        return len(self.word), self.word

    def __lt__(self, other: "Element") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return self.model.format_word(self.word)

    def __repr__(self) -> str:
        return f"Element({self.model.format_word(self.word)!r})"


@dataclass(frozen=True)
class ConjugacyRecord:
    """共轭类记录"""
    canonical_rep: Element
    tau: int
    pointed_length: int
    is_primitive: bool
    root: Element
    exponent: int

    @property
    def is_torsion(self) -> bool:
        return self.tau == 0 and self.pointed_length > 0

    def to_dict(self) -> Dict:
        return {
            "canonical_rep": str(self.canonical_rep),
            "tau": self.tau,
            "pointed_length": self.pointed_length,
            "is_primitive": self.is_primitive,
            "root": str(self.root),
            "exponent": self.exponent,
        }


# ----------------------------------------------------------------------
# 字组合学
# ----------------------------------------------------------------------
def minimal_rotation(w: bytes) -> bytes:
    """字典序最小的循环旋转"""
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def smallest_period(w: bytes) -> int:
    """
    由失配函数得到的最小循环周期；若最小周期不整除长度则返回长度
    """
    n = len(w)
    if n == 0:
        return 0
    fail = [0] * (n + 1)
    fail[0] = -1
    k = -1
    for i in range(n):
        while k >= 0 and w[k] != w[i]:
            k = fail[k]
        k += 1
        fail[i + 1] = k
    period = n - fail[n]
    return period if n % period == 0 else n


# ----------------------------------------------------------------------
# 元素运算
# ----------------------------------------------------------------------
def normalize(raw, model: GroupModel) -> Element:
    """记号串或字母序列 -> 规范形元素"""
    if isinstance(raw, str):
        return model.normalize(raw)
    return model.element(raw)


def multiply(g: Element, h: Element) -> Element:
    return g.model.multiply(g, h)


def invert(g: Element) -> Element:
    return g.model.invert(g)


def geodesic_vertices(g: Element) -> List[Element]:
    """o 到 g·o 的唯一测地线顶点序列(规范形前缀)"""
    return [Element(g.model, g.word[:i]) for i in range(len(g.word) + 1)]


def cyclic_reduce(g: Element) -> Tuple[Element, Element]:
    """
    Returns:
        (core, conjugator)，g = conjugator · core · conjugator⁻¹，core 长度等于 τ[g](挠元素除外)
    """
    core, conjugator = g.model.cyclic_reduce_word(g.word)
    return Element(g.model, core), Element(g.model, conjugator)


def stable_length_estimate(g: Element, n: int) -> Fraction:
    """
    d(o, g^n o)/n，由次可加性不小于 τ[g]

    Raises:
        ValueError: n < 1 时
    """
    if n < 1:
        raise ValueError("n 必须为正整数")
    return Fraction(len(g.model.pow_word(g.word, n)), n)


def conjugacy_canonical(g: Element) -> ConjugacyRecord:
    """共轭类的规范代表、稳定长度、点长度与本原根"""
    model = g.model
    core, _ = model.cyclic_reduce_word(g.word)
    if not core:
        identity = Element(model, b"")
        return ConjugacyRecord(identity, 0, 0, False, identity, 1)
    if not model.is_free and len(core) == 1:
        # 挠类：因子内元素只与自身共轭
        rep = Element(model, core)
        return ConjugacyRecord(rep, 0, 1, False, rep, 1)

    canon = minimal_rotation(core)
    period = smallest_period(canon)
    exponent = len(canon) // period
    root = Element(model, canon[:period])
    return ConjugacyRecord(
        canonical_rep=Element(model, canon),
        tau=len(canon),
        pointed_length=len(canon),
        is_primitive=exponent == 1,
        root=root,
        exponent=exponent,
    )


def is_conjugate(g: Element, h: Element) -> bool:
    if g.model != h.model:
        raise ModelMismatchError("不同模型的元素无法比较共轭性")
    return conjugacy_canonical(g).canonical_rep == conjugacy_canonical(h).canonical_rep


def primitive_root(g: Element) -> Tuple[Element, int]:
    """
    本原根 (root, exponent)，g 与 root^exponent 共轭

    Raises:
        DomainError: 单位元或挠元素
    """
    if g.is_identity() or g.is_torsion():
        raise DomainError(f"{g} 是单位元或挠元素，没有本原根")
    record = conjugacy_canonical(g)
    return record.root, record.exponent


def exact_root(g: Element) -> Tuple[Element, int]:
    """
    精确根 r，满足 r^exponent = g(不仅是共轭意义下)

    Raises:
        DomainError: 单位元或挠元素
    """
    if g.is_identity() or g.is_torsion():
        raise DomainError(f"{g} 是单位元或挠元素，没有本原根")
    model = g.model
    core, conjugator = model.cyclic_reduce_word(g.word)
    period = smallest_period(core)
    u = core[:period]
    root = model.mul_words(model.mul_words(conjugator, u), model.inv_word(conjugator))
    return Element(model, root), len(core) // period


def are_commensurable(g: Element, h: Element) -> bool:
    """两个非挠元素的某些非零幂共轭(等价于本原根共轭)"""
    root_g, _ = primitive_root(g)
    root_h, _ = primitive_root(h)
    if root_g == root_h:
        return True
    return conjugacy_canonical(root_g.inverse()).canonical_rep == root_h

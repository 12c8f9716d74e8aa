"""
文本协议定义
定义元素记号串的语法，以及报告(JSON/CSV)的序列化、反序列化和验证
"""

import csv
import hashlib
import io
import json
import re
import time
from typing import Dict, Any, Iterable, List, Optional, Sequence, Tuple

from common.constants import REPORT_VERSION, INVERSE_MARK, POWER_MARK, UNICODE_INVERSE


class ProtocolError(Exception):
    """协议错误异常"""
    pass


# letter = [a-z] 可选后缀 "'"(逆) 或 "^k"(幂，仅自由积因子)
_TOKEN_RE = re.compile(r"^([a-z])(?:(')|\^(-?\d+))?$")


class WordProtocol:
    """
    元素记号协议
    负责记号串与 (字母名, 指数) 序列之间的转换
    """

    @staticmethod
    def parse_tokens(text: str) -> List[Tuple[str, int, bool]]:
        """
        解析以空格分隔的记号串

        Args:
            text: 例如 "a b a'"、"s t^2" 或 "a b a⁻¹"

        Returns:
            (字母名, 指数, 是否显式幂记号) 的列表；"'" 记为指数 -1

        Raises:
            ProtocolError: 记号不符合语法时
        """
        if text is None:
            raise ProtocolError("记号串为空")

        normalized = text.replace(UNICODE_INVERSE, INVERSE_MARK)
        tokens = []
        for raw in normalized.split():
            match = _TOKEN_RE.match(raw)
            if match is None:
                raise ProtocolError(f"无法识别的记号: {raw!r}")
            name, inverse, power = match.groups()
            if power is not None:
                tokens.append((name, int(power), True))
            elif inverse:
                tokens.append((name, -1, False))
            else:
                tokens.append((name, 1, False))
        return tokens

    @staticmethod
    def format_tokens(tokens: Sequence[Tuple[str, int]], ascii_inverse: bool = True) -> str:
        """
        将 (字母名, 指数) 序列格式化为记号串

        Args:
            tokens: 记号列表
            ascii_inverse: 逆元使用 "'" 还是 "⁻¹"

        Returns:
            空格分隔的记号串，单位元为 "e"
        """
        if not tokens:
            return "e"
        inverse_mark = INVERSE_MARK if ascii_inverse else UNICODE_INVERSE
        parts = []
        for name, exponent in tokens:
            if exponent == 1:
                parts.append(name)
            elif exponent == -1:
                parts.append(f"{name}{inverse_mark}")
            else:
                parts.append(f"{name}{POWER_MARK}{exponent}")
        return " ".join(parts)


class ReportProtocol:
    """
    报告协议
    负责报告的 JSON 序列化、CSV 表格生成和摘要计算
    """

    @staticmethod
    def create_report(experiment_id: str,
                      kind: str,
                      config: Dict[str, Any],
                      results: Dict[str, Any],
                      timestamp: Optional[int] = None) -> Dict[str, Any]:
        """
        创建报告字典

        Args:
            experiment_id: 实验ID
            kind: 实验类型
            config: 完整的已解析配置
            results: 结果数据
            timestamp: 时间戳(毫秒)，如果为None则使用当前时间

        Returns:
            报告字典；generated_at 字段不参与确定性约定
        """
        if timestamp is None:
            timestamp = int(time.time() * 1000)

        return {
            "version": REPORT_VERSION,
            "experiment_id": experiment_id,
            "kind": kind,
            "config": config,
            "results": results,
            "generated_at": timestamp,
        }

    @staticmethod
    def encode_report(report: Dict[str, Any]) -> str:
        """序列化报告(键排序，保证字节级确定性)"""
        return json.dumps(report, sort_keys=True, ensure_ascii=False, indent=2, default=str) + "\n"

    @staticmethod
    def decode_report(data: str) -> Dict[str, Any]:
        """
        解析报告

        Raises:
            ProtocolError: 解析错误或版本不匹配时
        """
        try:
            report = json.loads(data)
        except json.JSONDecodeError:
            raise ProtocolError("报告JSON解析失败")

        if not isinstance(report, dict):
            raise ProtocolError("报告必须是JSON对象")
        if "experiment_id" not in report:
            raise ProtocolError("报告缺少实验ID字段")
        if report.get("version") != REPORT_VERSION:
            raise ProtocolError(f"报告版本不匹配: {report.get('version')} != {REPORT_VERSION}")
        return report

    @staticmethod
    def encode_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """生成CSV文本(行尾统一为\\n)"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
        return buffer.getvalue()

    @staticmethod
    def digest(words: Iterable[bytes]) -> str:
        """
        与顺序无关的摘要

        Args:
            words: 字节串形式的规范字

        Returns:
            排序后逐项哈希的 sha256 十六进制串
        """
        hasher = hashlib.sha256()
        for word in sorted(words):
            hasher.update(len(word).to_bytes(2, "big"))
            hasher.update(word)
        return hasher.hexdigest()

"""
枚举预算
在多个分片线程之间共享的元素计数上限
"""

import logging
import threading

from common.constants import DEFAULT_BUDGET

logger = logging.getLogger(__name__)


class BudgetExceededError(RuntimeError):
    """枚举规模超过预算"""
    pass


class Budget:
    """
    线程安全的元素计数器，超过上限时抛出 BudgetExceededError
    """

    def __init__(self, limit: int = DEFAULT_BUDGET):
        """
        初始化预算

        Args:
            limit: 允许枚举的元素总数上限
        """
        if limit <= 0:
            raise ValueError("预算必须大于0")

        self.limit = limit
        self.used = 0
        self._lock = threading.Lock()

    def charge(self, count: int = 1):
        """
        记账

        Args:
            count: 本次新增的元素数

        Raises:
            BudgetExceededError: 累计数超过上限时
        """
        with self._lock:
            self.used += count
            if self.used > self.limit:
                logger.error(f"预算耗尽: 已用 {self.used} > 上限 {self.limit}")
                raise BudgetExceededError(f"枚举元素数 {self.used} 超过预算 {self.limit}")

    def require(self, count: int):
        """预检查：若预计规模超过剩余预算则立即失败(不记账)"""
        with self._lock:
            if self.used + count > self.limit:
                raise BudgetExceededError(f"预计枚举 {count} 个元素，剩余预算 {self.limit - self.used} 不足")

    @property
    def remaining(self) -> int:
        with self._lock:
            return self.limit - self.used

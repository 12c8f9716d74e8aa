"""
实验配置管理

配置是单个 YAML 文档，四个顶层键：model、experiment、parameters、output。
缺省值来自 common.constants，解析后的完整配置写入每个输出文件。
"""

import copy
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import yaml

from common.constants import (DEFAULT_BUDGET, DEFAULT_DELTA_WIDTH, DEFAULT_EPSILON, DEFAULT_INDEX_CAP,
                              DEFAULT_M, DEFAULT_SEED, DEFAULT_SHARDS, ExperimentKind, ModelKind)

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """配置无效"""
    pass


DEFAULT_PARAMETERS: Dict[str, Any] = {
    "max_radius": 8,
    "delta_width": DEFAULT_DELTA_WIDTH,
    "epsilon": DEFAULT_EPSILON,
    "M": DEFAULT_M,
}

# 每种实验必须提供的参数
REQUIRED_PARAMETERS: Dict[str, tuple] = {
    ExperimentKind.CENSUS_BARRIERS: ("f",),
    ExperimentKind.CENSUS_FRACTIONAL: ("f", "theta", "L"),
    ExperimentKind.CENSUS_DRIFT: ("f", "m", "theta1", "theta2"),
    ExperimentKind.AUDIT_CONTRACTION: ("f",),
    ExperimentKind.ADMISSIBLE: ("f", "m"),
    ExperimentKind.COMPLEX_BUILD: ("f", "window"),
    ExperimentKind.COMPLEX_LOXODROMIC: ("f", "g", "window", "N", "K_prime"),
    ExperimentKind.COMPLEX_ACYL: ("f", "window", "D", "R"),
    ExperimentKind.SERIES: ("series_kind", "max_order"),
    ExperimentKind.SCC_ESTIMATE: ("subgroup", "M1", "M2"),
}


@dataclass
class ExperimentConfig:
    """解析并校验后的实验配置"""
    model: Dict[str, Any]
    kind: str
    experiment_id: str
    seed: int = DEFAULT_SEED
    shards: int = DEFAULT_SHARDS
    budget: int = DEFAULT_BUDGET
    index_cap: int = DEFAULT_INDEX_CAP
    parameters: Dict[str, Any] = field(default_factory=dict)
    output: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        从嵌套字典构造并校验

        Raises:
            ConfigError: 缺少键或取值非法
        """
        if not isinstance(data, dict):
            raise ConfigError("配置必须是键值映射")
        model = data.get("model")
        experiment = data.get("experiment") or {}
        if not isinstance(model, dict) or "kind" not in model:
            raise ConfigError("缺少 model.kind")
        if "kind" not in experiment:
            raise ConfigError("缺少 experiment.kind")

        parameters = copy.deepcopy(DEFAULT_PARAMETERS)
        parameters.update(data.get("parameters") or {})
        output = {"dir": "results", "csv": True, "json": True}
        output.update(data.get("output") or {})

        config = cls(
            model=dict(model),
            kind=experiment["kind"],
            experiment_id=str(experiment.get("id", experiment["kind"])),
            seed=int(experiment.get("seed", DEFAULT_SEED)),
            shards=int(experiment.get("shards", DEFAULT_SHARDS)),
            budget=int(experiment.get("budget", DEFAULT_BUDGET)),
            index_cap=int(experiment.get("index_cap", DEFAULT_INDEX_CAP)),
            parameters=parameters,
            output=output,
        )
        config.validate()
        return config

    @classmethod
    def from_yaml(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
        logger.info(f"加载配置: {path}")
        return cls.from_dict(data or {})

    def model_spec(self) -> str:
        """GroupModel.from_spec 可解析的字符串"""
        if self.model["kind"] == ModelKind.FREE:
            return f"free({self.model.get('rank', 2)})"
        orders = self.model.get("orders", [2, 3])
        return f"free-product({','.join(str(o) for o in orders)})"

    def validate(self):
        """
        在任何枚举开始之前校验全部参数

        Raises:
            ConfigError: 非法配置
        """
        if self.kind not in ExperimentKind.ALL:
            raise ConfigError(f"未知的实验类型: {self.kind}")
        if self.model["kind"] not in (ModelKind.FREE, ModelKind.FREE_PRODUCT):
            raise ConfigError(f"未知的模型类型: {self.model['kind']}")
        if self.model["kind"] == ModelKind.FREE:
            rank = self.model.get("rank", 2)
            if not isinstance(rank, int) or rank < 2:
                raise ConfigError(f"自由群的秩必须至少为2(初等群不在研究范围内): {rank}")
        else:
            orders = self.model.get("orders", [2, 3])
            if not isinstance(orders, list) or len(orders) < 2 or any(int(o) < 2 for o in orders):
                raise ConfigError(f"自由积至少需要两个阶 ≥ 2 的因子: {orders}")
            if sorted(int(o) for o in orders) == [2, 2]:
                raise ConfigError("Z/2*Z/2 是初等群")
        if self.shards < 1:
            raise ConfigError("分片数必须至少为1")
        if self.budget < 1:
            raise ConfigError("预算必须为正")
        if self.parameters.get("max_radius", 0) < 0:
            raise ConfigError("max_radius 必须非负")
        if self.parameters.get("epsilon", 0) < 0 or self.parameters.get("M", 0) < 0:
            raise ConfigError("ε 与 M 必须非负")
        missing = [key for key in REQUIRED_PARAMETERS.get(self.kind, ()) if key not in self.parameters]
        if missing:
            raise ConfigError(f"实验 {self.kind} 缺少参数: {', '.join(missing)}")

    def override(self, **values) -> "ExperimentConfig":
        """命令行参数覆盖文件中的取值(None 表示不覆盖)，覆盖后重新校验"""
        clone = copy.deepcopy(self)
        for key, value in values.items():
            if value is None:
                continue
            if key == "out_dir":
                clone.output["dir"] = value
            elif hasattr(clone, key):
                setattr(clone, key, value)
            else:
                clone.parameters[key] = value
        clone.validate()
        return clone

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "experiment": {
                "kind": self.kind,
                "id": self.experiment_id,
                "seed": self.seed,
                "shards": self.shards,
                "budget": self.budget,
                "index_cap": self.index_cap,
            },
            "parameters": self.parameters,
            "output": self.output,
        }

"""
日志工具
"""

import logging
import logging.config
import os
from typing import Optional

import yaml

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

DEFAULT_LOGGING_CONFIG = os.path.join(
    os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
    "config", "logging_config.yaml")


def setup_logging(config_path: Optional[str] = None, level: Optional[str] = None):
    """
    配置日志：优先读取 YAML(dictConfig)，失败时退回 basicConfig

    Args:
        config_path: 日志配置文件路径，默认 config/logging_config.yaml
        level: 覆盖根日志级别，如 "DEBUG"
    """
    path = config_path or DEFAULT_LOGGING_CONFIG
    try:
        with open(path, "r", encoding="utf-8") as fh:
            logging.config.dictConfig(yaml.safe_load(fh))
    except (OSError, ValueError, TypeError, yaml.YAMLError) as e:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
        logging.getLogger(__name__).warning(f"日志配置 {path} 不可用，使用默认配置: {e}")

    if level:
        logging.getLogger().setLevel(level.upper())

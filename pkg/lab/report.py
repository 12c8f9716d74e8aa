"""
报告汇总：按实验ID合并多个实验输出为一个 JSON + CSV 包
"""

import logging
import os
import tempfile
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from common.protocol import ReportProtocol

logger = logging.getLogger(__name__)


class ReportError(Exception):
    """实验ID冲突或报告无法读取"""
    pass


def atomic_write(path: str, content: str):
    """先写临时文件再改名，读者不会看到写了一半的文件"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def emit_report(reports: Iterable[Dict],
                csv_tables: Optional[Union[Dict[str, str], Iterable[Tuple[str, str]]]] = None) -> Dict:
    """
    合并报告

    Args:
        reports: ReportProtocol.create_report 生成的报告
        csv_tables: 实验ID ↦ CSV 文本，或 (实验ID, CSV 文本) 序列

    Returns:
        {"experiments": {id: report}, "tables": {id: csv}}

    Raises:
        ReportError: 实验ID重复，或 CSV 表没有对应的报告
    """
    bundle: Dict[str, Dict] = {"experiments": {}, "tables": {}}
    for report in reports:
        experiment_id = report["experiment_id"]
        if experiment_id in bundle["experiments"]:
            raise ReportError(f"实验ID冲突: {experiment_id}")
        bundle["experiments"][experiment_id] = report
    if isinstance(csv_tables, dict):
        csv_tables = csv_tables.items()
    for experiment_id, table in csv_tables or ():
        if experiment_id in bundle["tables"]:
            raise ReportError(f"实验ID冲突: {experiment_id} 有多个 CSV 表")
        if experiment_id not in bundle["experiments"]:
            raise ReportError(f"CSV 表 {experiment_id} 没有对应的实验报告")
        bundle["tables"][experiment_id] = table
    logger.info(f"合并报告: {len(bundle['experiments'])} 个实验, {len(bundle['tables'])} 个表")
    return bundle


def load_reports(paths: Iterable[str]) -> List[Dict]:
    """读取并解析 JSON 报告"""
    reports = []
    for path in paths:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                reports.append(ReportProtocol.decode_report(fh.read()))
        except OSError as e:
            raise ReportError(f"无法读取报告 {path}: {e}") from e
    return reports


def load_tables(paths: Sequence[str], reports: Sequence[Dict]) -> List[Tuple[str, str]]:
    """读取与每个 JSON 报告同名的 CSV 表(若存在)，按报告中的实验ID标记"""
    tables = []
    for path, report in zip(paths, reports):
        csv_path = os.path.splitext(path)[0] + ".csv"
        if not os.path.exists(csv_path):
            continue
        try:
            with open(csv_path, "r", encoding="utf-8", newline="") as fh:
                tables.append((report["experiment_id"], fh.read()))
        except OSError as e:
            raise ReportError(f"无法读取表格 {csv_path}: {e}") from e
    return tables


def write_bundle(bundle: Dict, out_dir: str, name: str = "bundle") -> List[str]:
    """写出合并后的 JSON 以及各实验的 CSV"""
    written = []
    json_path = os.path.join(out_dir, f"{name}.json")
    atomic_write(json_path, ReportProtocol.encode_report(bundle))
    written.append(json_path)
    for experiment_id, table in sorted(bundle["tables"].items()):
        csv_path = os.path.join(out_dir, f"{name}-{experiment_id}.csv")
        atomic_write(csv_path, table)
        written.append(csv_path)
    return written

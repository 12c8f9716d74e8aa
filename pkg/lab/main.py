import argparse
import logging
import os
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

# 添加项目根目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from common.budget import Budget, BudgetExceededError
from common.constants import ExitStatus, ExperimentKind
from common.protocol import ProtocolError, ReportProtocol
from common.utils.config import ConfigError, ExperimentConfig
from common.utils.logger import setup_logging
from census.automaton import scc_estimate
from census.conjugacy import build_conjugacy_census, envelope_check, primitive_ratio_curve
from census.enumeration import build_census, growth_exponent, sphere_counts
from geometry.admissible import build_admissible_witness, validate_admissible
from geometry.axis import AxisSet
from geometry.barriers import BarrierSpec, barrier_free_census, fractional_barrier_census
from geometry.contracting import (bounded_intersection_audit, contraction_audit,
                                  projection_triangle_audit, quasi_convexity_audit)
from geometry.drift import linear_drift_census
from groups.elementary import elementary_subgroup
from groups.models import DomainError, GroupModel, conjugacy_canonical
from lab.report import ReportError, atomic_write, emit_report, load_reports, load_tables, write_bundle
from projection.complex import (acylindricity_probe, build_complex, default_k, export_adjacency,
                                loxodromic_test)
from series.analysis import build_series_report

logger = logging.getLogger("main")


class ExperimentRunner:
    """
    实验编排：解析模型与参数，调用对应模块，写出 CSV / JSON / 文本产物
    """

    def __init__(self, config: ExperimentConfig):
        """
        初始化实验

        Args:
            config: 已校验的实验配置

        Raises:
            ConfigError: 模型无法构造
        """
        self.config = config
        try:
            self.model = GroupModel.from_spec(config.model_spec(), alphabet=config.model.get("alphabet"))
        except (ValueError, ProtocolError) as e:
            raise ConfigError(f"模型无效: {e}") from e
        self.budget = Budget(config.budget)
        self.params = config.parameters

        self._handlers = {
            ExperimentKind.MODEL_INFO: self._model_info,
            ExperimentKind.CENSUS_BALLS: self._census_balls,
            ExperimentKind.CENSUS_CONJUGACY: self._census_conjugacy,
            ExperimentKind.CENSUS_BARRIERS: self._census_barriers,
            ExperimentKind.CENSUS_FRACTIONAL: self._census_fractional,
            ExperimentKind.CENSUS_DRIFT: self._census_drift,
            ExperimentKind.AUDIT_CONTRACTION: self._audit_contraction,
            ExperimentKind.ADMISSIBLE: self._admissible,
            ExperimentKind.COMPLEX_BUILD: self._complex_build,
            ExperimentKind.COMPLEX_LOXODROMIC: self._complex_loxodromic,
            ExperimentKind.COMPLEX_ACYL: self._complex_acyl,
            ExperimentKind.SERIES: self._series,
            ExperimentKind.SCC_ESTIMATE: self._scc_estimate,
        }
        logger.info(f"实验 {config.experiment_id}: {config.kind} on {self.model.describe()}")

    # ------------------------------------------------------------------
    def _element(self, key: str, default: Optional[str] = None):
        raw = self.params.get(key, default)
        if raw is None:
            raise ConfigError(f"缺少参数: {key}")
        try:
            return self.model.parse(str(raw))
        except ProtocolError as e:
            raise ConfigError(f"参数 {key} 无法解析: {e}") from e

    def _window(self, key: str = "window") -> Optional[Tuple[int, int]]:
        value = self.params.get(key)
        if value is None:
            return None
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError(f"参数 {key} 必须是 [low, high]")
        return int(value[0]), int(value[1])

    def _delta_hat(self) -> float:
        radius = max(int(self.params["max_radius"]), 4)
        delta_hat, _ = growth_exponent(build_census(self.model, radius, 0, self.config.shards, self.budget))
        return delta_hat

    # ------------------------------------------------------------------
    def _model_info(self) -> Tuple[Dict, Optional[str]]:
        radius = min(int(self.params["max_radius"]), 6)
        results = {"model": self.model.to_dict(), "sphere_counts": sphere_counts(self.model, radius)}
        if "g" in self.params:
            g = self._element("g")
            results["element"] = conjugacy_canonical(g).to_dict()
            if not (g.is_identity() or g.is_torsion()):
                search = int(self.params.get("search_radius", 4))
                results["elementary"] = elementary_subgroup(g, search).to_dict()
        return results, None

    def _census_balls(self):
        census = build_census(self.model, int(self.params["max_radius"]), int(self.params["delta_width"]),
                              self.config.shards, self.budget)
        results = census.to_dict()
        if len(census.radii) >= 4:
            delta, fit = growth_exponent(census)
            results["delta_hat"] = delta
            results["fit"] = fit.to_dict()
        return results, census.to_csv()

    def _census_conjugacy(self):
        census = build_conjugacy_census(self.model, int(self.params["max_radius"]), self.config.shards,
                                        self.budget, self.config.index_cap)
        results = census.to_dict()
        results["primitive_ratio"] = primitive_ratio_curve(census).to_dict()
        window = self._window()
        envelope = None
        if window is not None:
            delta_hat = self._delta_hat()
            stats = envelope_check(census, delta_hat, window)
            results["delta_hat"] = delta_hat
            results["envelope"] = {name: s.to_dict() for name, s in stats.items()}
            envelope = stats["primitive_pointed"].values
        return results, census.to_csv(envelope)

    def _barrier_spec(self, f) -> BarrierSpec:
        return BarrierSpec(int(self.params["epsilon"]), f, int(self.params["M"]),
                           oriented=bool(self.params.get("oriented", True)))

    def _census_barriers(self):
        spec = self._barrier_spec(self._element("f"))
        census = barrier_free_census(self.model, spec, int(self.params["max_radius"]), self.config.shards,
                                     self.budget, self._window("fit_window"))
        return census.to_dict(), census.to_csv()

    def _census_fractional(self):
        spec = self._barrier_spec(self._element("f"))
        census = fractional_barrier_census(self.model, spec, Fraction(str(self.params["theta"])),
                                           int(self.params["L"]), int(self.params["max_radius"]),
                                           self.config.shards, self.budget, self._window("fit_window"))
        return census.to_dict(), census.to_csv()

    def _census_drift(self):
        census = linear_drift_census(self.model, self._element("f"), int(self.params["m"]),
                                     Fraction(str(self.params["theta1"])), Fraction(str(self.params["theta2"])),
                                     int(self.params["max_radius"]), int(self.params["epsilon"]),
                                     self.config.shards, self.budget)
        return census.to_dict(), census.to_csv()

    def _audit_contraction(self):
        f = self._element("f")
        axis = AxisSet(f)
        radius = int(self.params.get("sample_radius", min(int(self.params["max_radius"]), 4)))
        samples = self.params.get("samples")
        contraction = contraction_audit(axis, self.model, radius, samples, self.config.seed, self.budget)
        intersection = bounded_intersection_audit(f, self.model, min(radius, 3), self.budget)
        triangle = projection_triangle_audit(axis, int(self.params.get("triangle_samples", 100)),
                                             self.config.seed, radius)
        results = {
            "contraction": contraction.to_dict(),
            "bounded_intersection": intersection.to_dict(),
            "triangle": triangle.to_dict(),
            "quasi_convexity_sigma": quasi_convexity_audit(axis, radius + len(f)),
        }
        return results, None

    def _admissible(self):
        witness = build_admissible_witness(
            self._element("t1", "e"), self._element("f"), int(self.params["m"]), self._element("t2", "e"),
            d=self.params.get("D"), tau=self.params.get("tau"), window=int(self.params.get("periods", 1)))
        validation = validate_admissible(witness, int(self.params.get("C", 0)))
        return {"witness": witness.to_dict(), "validation": validation.to_dict()}, None

    def _complex(self):
        f = self._element("f")
        window = int(self.params["window"])
        k = self.params.get("K")
        complex_graph = build_complex(self.model, f, int(k) if k else 1, window, self.config.shards, self.budget)
        if not k:
            complex_graph = complex_graph.with_k(default_k(complex_graph))
            logger.info(f"使用使窗口连通的最小 K={complex_graph.k}")
        return complex_graph

    def _complex_build(self):
        complex_graph = self._complex()
        text, metadata = export_adjacency(complex_graph)
        return {"complex": complex_graph.to_dict(), "metadata": metadata, "adjacency": text}, None

    def _complex_loxodromic(self):
        complex_graph = self._complex()
        report = loxodromic_test(self._element("g"), complex_graph, int(self.params["N"]),
                                 int(self.params["K_prime"]))
        return {"K": complex_graph.k, "loxodromic": report.to_dict()}, None

    def _complex_acyl(self):
        complex_graph = self._complex()
        radii = self.params["R"] if isinstance(self.params["R"], list) else [self.params["R"]]
        table = acylindricity_probe(complex_graph, int(self.params["D"]), [int(r) for r in radii],
                                    int(self.params.get("sample_size", 200)), self.config.seed,
                                    int(self.params.get("mover_radius", 2)))
        return {"K": complex_graph.k, "acylindricity": table.to_dict()}, None

    def _series(self):
        delta = self.params.get("annulus_width")
        report = build_series_report(self.model, self.params["series_kind"], int(self.params["max_radius"]),
                                     int(self.params["max_order"]), self._window(),
                                     self.params.get("delta_hat"),
                                     None if delta is None else int(delta),
                                     self.config.shards, self.budget)
        return report.to_dict(), None

    def _scc_estimate(self):
        subgroup = self.params["subgroup"]
        if not isinstance(subgroup, list):
            subgroup = [subgroup]
        generators = [self.model.parse(str(s)) for s in subgroup]
        estimate = scc_estimate(self.model, generators, int(self.params["M1"]), int(self.params["M2"]),
                                int(self.params["max_radius"]), self.budget)
        return estimate.to_dict(), None

    # ------------------------------------------------------------------
    def run(self) -> Tuple[Dict, Optional[str]]:
        """执行实验，返回 (结果, CSV文本或None)"""
        handler = self._handlers.get(self.config.kind)
        if handler is None:
            raise ConfigError(f"实验类型 {self.config.kind} 不能由 ExperimentRunner 执行")
        return handler()

    def write(self, results: Dict, csv_text: Optional[str], timestamp: Optional[int] = None) -> List[str]:
        """写出产物(先写临时文件再改名)"""
        out_dir = self.config.output.get("dir", "results")
        base = os.path.join(out_dir, self.config.experiment_id)
        written = []
        report = ReportProtocol.create_report(self.config.experiment_id, self.config.kind,
                                              self.config.to_dict(), results, timestamp)
        if self.config.output.get("json", True):
            atomic_write(base + ".json", ReportProtocol.encode_report(report))
            written.append(base + ".json")
        if csv_text is not None and self.config.output.get("csv", True):
            atomic_write(base + ".csv", csv_text)
            written.append(base + ".csv")
        if "adjacency" in results:
            atomic_write(base + ".adj", results["adjacency"])
            written.append(base + ".adj")
        logger.info(f"实验 {self.config.experiment_id} 输出: {', '.join(written)}")
        return written


def run_experiment(config: ExperimentConfig) -> int:
    """
    执行单个实验并返回退出码

    Returns:
        0 成功，2 配置错误，3 超出预算，1 其他失败
    """
    try:
        runner = ExperimentRunner(config)
        results, csv_text = runner.run()
        runner.write(results, csv_text)
        return ExitStatus.OK
    except BudgetExceededError as e:
        logger.error(f"超出预算: {e}")
        return ExitStatus.BUDGET
    except (ConfigError, DomainError) as e:
        logger.error(f"配置无效: {e}")
        return ExitStatus.USAGE
    except Exception as e:
        logger.error(f"实验失败: {e}", exc_info=True)
        return ExitStatus.FAILURE


def run_report(inputs: List[str], out_dir: str) -> int:
    """合并已有的 JSON 报告及其同名 CSV 表；无输入时输出空包"""
    try:
        reports = load_reports(inputs)
        bundle = emit_report(reports, load_tables(inputs, reports))
        write_bundle(bundle, out_dir)
        return ExitStatus.OK
    except (ReportError, ProtocolError) as e:
        logger.error(f"报告合并失败: {e}")
        return ExitStatus.FAILURE


def parse_arguments(argv: Optional[List[str]] = None):
    """解析命令行参数"""
    parser = argparse.ArgumentParser(description="共轭增长实验工具")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML 实验配置文件")
    common.add_argument("--model", help="模型，如 free(2) 或 free-product(2,3)")
    common.add_argument("--out-dir", help="输出目录")
    common.add_argument("--seed", type=int, help="随机种子")
    common.add_argument("--shards", type=int, help="分片数")
    common.add_argument("--budget", type=int, help="枚举预算")
    common.add_argument("--log-level", help="日志级别，如 DEBUG")
    common.add_argument("--max-radius", type=int, help="最大半径")
    common.add_argument("--delta-width", type=int, help="球计数的窗口宽度 Δ")
    common.add_argument("--f", help="屏障 / 轴元素，如 'a b'")
    common.add_argument("--epsilon", type=int, help="屏障参数 ε")
    common.add_argument("--theta", help="分数比例 θ，如 1/2")
    common.add_argument("--L", type=int, help="子区间最小长度")
    common.add_argument("--K", type=int, help="投影复形参数 K")
    common.add_argument("--window", type=int, help="投影复形窗口半径")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="设置任意参数(可重复)")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for kind in ExperimentKind.ALL:
        sub = subparsers.add_parser(kind, parents=[common])
        if kind == ExperimentKind.REPORT:
            sub.add_argument("inputs", nargs="*", help="要合并的 JSON 报告")
    return parser.parse_args(argv)


def _model_section(spec: str) -> Dict:
    model = GroupModel.from_spec(spec, allow_elementary=True)
    if model.is_free:
        return {"kind": "free", "rank": model.rank}
    return {"kind": "free-product", "orders": list(model.orders)}


def _parse_value(raw: str):
    """--set 的取值：整数、列表(逗号分隔)或原样字符串"""
    if "," in raw:
        return [_parse_value(part) for part in raw.split(",")]
    try:
        return int(raw)
    except ValueError:
        return raw


def build_config(args) -> ExperimentConfig:
    """合并配置文件与命令行参数；命令行优先"""
    if args.config:
        data = ExperimentConfig.from_yaml(args.config).to_dict()
    else:
        data = {"model": {"kind": "free", "rank": 2}, "experiment": {}, "parameters": {}}
    if args.model:
        try:
            data["model"] = _model_section(args.model)
        except (ValueError, ProtocolError) as e:
            raise ConfigError(f"模型无效: {e}") from e
    data["experiment"]["kind"] = args.command
    data["experiment"].setdefault("id", args.command)

    parameters = data.setdefault("parameters", {})
    for key, value in (("max_radius", args.max_radius), ("delta_width", args.delta_width), ("f", args.f),
                       ("epsilon", args.epsilon),
                       ("theta", args.theta), ("L", args.L), ("K", args.K), ("window", args.window)):
        if value is not None:
            parameters[key] = value
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set 需要 KEY=VALUE: {item}")
        key, raw = item.split("=", 1)
        parameters[key] = _parse_value(raw)

    config = ExperimentConfig.from_dict(data)
    return config.override(seed=args.seed, shards=args.shards, budget=args.budget, out_dir=args.out_dir)


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    args = parse_arguments(argv)
    setup_logging(level=args.log_level)

    if args.command == ExperimentKind.REPORT:
        return run_report(args.inputs, args.out_dir or "results")

    try:
        config = build_config(args)
    except ConfigError as e:
        logger.error(f"配置无效: {e}")
        return ExitStatus.USAGE
    return run_experiment(config)


if __name__ == "__main__":
    sys.exit(main())

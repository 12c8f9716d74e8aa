import json
from unittest.mock import MagicMock, patch

import pytest

from common.budget import BudgetExceededError
from common.constants import ExitStatus
from common.utils.config import ConfigError, ExperimentConfig
from lab.main import ExperimentRunner, build_config, main, parse_arguments, run_experiment


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def make_config(kind, tmp_path, model=None, **parameters):
    return ExperimentConfig.from_dict({
        "model": model or {"kind": "free", "rank": 2},
        "experiment": {"kind": kind, "id": kind},
        "parameters": parameters,
        "output": {"dir": str(tmp_path)},
    })


def test_census_balls_writes_csv(tmp_path):
    """测试球计数实验输出 n = 0..10 的 CSV"""
    code = main(["census-balls", "--model", "free-product(2,3)", "--max-radius", "10", "--out-dir", str(tmp_path)])
    assert code == ExitStatus.OK

    lines = (tmp_path / "census-balls.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,sphere,ball,annulus"
    assert len(lines) == 12
    assert lines[1].startswith("0,1,1,")

    report = read_json(tmp_path / "census-balls.json")
    assert report["kind"] == "census-balls"
    assert report["config"]["model"] == {"kind": "free-product", "orders": [2, 3]}
    assert report["results"]["sphere_counts"][:6] == [1, 3, 4, 6, 8, 12]


def test_rerun_is_deterministic(tmp_path):
    """除 generated_at 外输出逐字节一致"""
    argv = ["census-conjugacy", "--max-radius", "4", "--out-dir", str(tmp_path)]
    assert main(argv) == ExitStatus.OK
    first = read_json(tmp_path / "census-conjugacy.json")
    first_csv = (tmp_path / "census-conjugacy.csv").read_text(encoding="utf-8")
    assert main(argv) == ExitStatus.OK
    second = read_json(tmp_path / "census-conjugacy.json")

    first.pop("generated_at")
    second.pop("generated_at")
    assert first == second
    assert (tmp_path / "census-conjugacy.csv").read_text(encoding="utf-8") == first_csv


def test_elementary_model_rejected(tmp_path):
    """初等群在任何枚举开始前被拒绝"""
    with patch("lab.main.ExperimentRunner") as mock_runner:
        code = main(["census-balls", "--model", "free(1)", "--out-dir", str(tmp_path)])
    assert code == ExitStatus.USAGE
    mock_runner.assert_not_called()
    assert not list(tmp_path.iterdir())


def test_unparseable_model():
    assert main(["census-balls", "--model", "surface(2)"]) == ExitStatus.USAGE


def test_budget_exceeded(tmp_path):
    code = main(["census-balls", "--max-radius", "10", "--budget", "100", "--out-dir", str(tmp_path)])
    assert code == ExitStatus.BUDGET


def test_missing_parameter(tmp_path):
    assert main(["census-barriers", "--out-dir", str(tmp_path)]) == ExitStatus.USAGE


def test_bad_element_parameter(tmp_path):
    config = make_config("census-barriers", tmp_path, f="ab", max_radius=2)
    assert run_experiment(config) == ExitStatus.USAGE


def test_unexpected_failure(tmp_path):
    config = make_config("census-balls", tmp_path, max_radius=2)
    with patch("lab.main.build_census", side_effect=RuntimeError("boom")):
        assert run_experiment(config) == ExitStatus.FAILURE


def test_budget_error_from_module(tmp_path):
    config = make_config("census-balls", tmp_path, max_radius=2)
    with patch("lab.main.build_census", side_effect=BudgetExceededError("over")):
        assert run_experiment(config) == ExitStatus.BUDGET


def test_report_empty_bundle(tmp_path):
    assert main(["report", "--out-dir", str(tmp_path)]) == ExitStatus.OK
    bundle = read_json(tmp_path / "bundle.json")
    assert bundle == {"experiments": {}, "tables": {}}


def test_report_merges_experiments(tmp_path):
    for kind in ("model-info", "census-balls"):
        assert main([kind, "--max-radius", "3", "--out-dir", str(tmp_path)]) == ExitStatus.OK
    inputs = [str(tmp_path / "model-info.json"), str(tmp_path / "census-balls.json")]
    assert main(["report", *inputs, "--out-dir", str(tmp_path / "bundle")]) == ExitStatus.OK
    bundle = read_json(tmp_path / "bundle" / "bundle.json")
    assert set(bundle["experiments"]) == {"model-info", "census-balls"}
    csv_text = (tmp_path / "census-balls.csv").read_text(encoding="utf-8")
    assert bundle["tables"] == {"census-balls": csv_text}
    assert (tmp_path / "bundle" / "bundle-census-balls.csv").read_text(encoding="utf-8") == csv_text
    assert not (tmp_path / "bundle" / "bundle-model-info.csv").exists()

    # 同一报告重复出现时ID冲突
    assert main(["report", inputs[0], inputs[0], "--out-dir", str(tmp_path / "dup")]) == ExitStatus.FAILURE


def test_build_config_cli_overrides(tmp_path):
    config_path = tmp_path / "experiment.yaml"
    config_path.write_text(
        "model:\n  kind: free\n  rank: 3\n"
        "experiment:\n  kind: census-barriers\n  id: from-file\n  shards: 2\n"
        "parameters:\n  f: \"a b\"\n  epsilon: 2\n",
        encoding="utf-8")
    args = parse_arguments(["census-barriers", "--config", str(config_path), "--epsilon", "0",
                            "--shards", "4", "--set", "fit_window=2,5", "--set", "oriented=0"])
    config = build_config(args)
    assert config.experiment_id == "from-file"
    assert config.model_spec() == "free(3)"
    assert config.shards == 4
    assert config.parameters["epsilon"] == 0
    assert config.parameters["fit_window"] == [2, 5]
    assert config.parameters["oriented"] == 0


def test_delta_width_flag(tmp_path):
    args = parse_arguments(["census-balls", "--delta-width", "2", "--set", "L=3"])
    assert build_config(args).parameters["delta_width"] == 2
    assert parse_arguments(["census-balls"]).delta_width is None

    argv = ["census-balls", "--max-radius", "3", "--delta-width", "2", "--out-dir", str(tmp_path)]
    assert main(argv) == ExitStatus.OK
    report = read_json(tmp_path / "census-balls.json")
    assert report["config"]["parameters"]["delta_width"] == 2
    assert report["results"]["annulus_width"] == 2
    # F2: 球面 1, 4, 12, 36, 108
    assert report["results"]["annulus_counts"][:2] == [17, 53]


def test_build_config_rejects_bad_set():
    args = parse_arguments(["series", "--set", "max_order"])
    with pytest.raises(ConfigError, match="KEY=VALUE"):
        build_config(args)


def test_runner_dispatch(tmp_path):
    """测试实验类型到处理函数的分派"""
    config = make_config("series", tmp_path, series_kind="sphere", max_order=2, max_radius=5, delta_hat=1.0)
    runner = ExperimentRunner(config)
    mock_series = MagicMock(return_value=({"ok": True}, None))
    runner._handlers["series"] = mock_series
    assert runner.run() == ({"ok": True}, None)
    mock_series.assert_called_once_with()

    runner.config.kind = "report"
    with pytest.raises(ConfigError, match="不能由 ExperimentRunner 执行"):
        runner.run()


def test_series_experiment(tmp_path):
    config = make_config("series", tmp_path, series_kind="sphere", max_order=2, max_radius=5, delta_hat=1.0)
    runner = ExperimentRunner(config)
    results, csv_text = runner.run()
    assert csv_text is None
    assert results["verdict"] == "linear recurrence of order 2"


def test_complex_build_writes_adjacency(tmp_path):
    config = make_config("complex-build", tmp_path, f="a b", window=1)
    assert run_experiment(config) == ExitStatus.OK
    adjacency = (tmp_path / "complex-build.adj").read_text(encoding="utf-8")
    assert len(adjacency.splitlines()) == 4
    report = read_json(tmp_path / "complex-build.json")
    assert report["results"]["metadata"]["K"] >= 1


def test_model_info_with_element(tmp_path):
    config = make_config("model-info", tmp_path, g="a b a'", max_radius=3)
    results, _ = ExperimentRunner(config).run()
    assert results["sphere_counts"] == [1, 4, 12, 36]
    assert "elementary" in results


def test_admissible_experiment(tmp_path):
    config = make_config("admissible", tmp_path, f="a b", m=5, t1="a", t2="b'")
    results, _ = ExperimentRunner(config).run()
    assert results["validation"]["passed"]


def test_report_rejects_same_experiment_from_two_runs(tmp_path):
    for run in ("first", "second"):
        assert main(["census-balls", "--max-radius", "2", "--out-dir", str(tmp_path / run)]) == ExitStatus.OK
    inputs = [str(tmp_path / run / "census-balls.json") for run in ("first", "second")]
    assert main(["report", *inputs, "--out-dir", str(tmp_path / "bundle")]) == ExitStatus.FAILURE
    assert not (tmp_path / "bundle" / "bundle.json").exists()

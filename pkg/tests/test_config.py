import pytest

from common.constants import DEFAULT_BUDGET, DEFAULT_EPSILON, DEFAULT_SHARDS
from common.utils.config import ConfigError, ExperimentConfig


def base_config(**parameters):
    return {
        "model": {"kind": "free", "rank": 2},
        "experiment": {"kind": "census-balls", "id": "balls"},
        "parameters": parameters,
    }


def test_defaults():
    config = ExperimentConfig.from_dict(base_config())
    assert config.shards == DEFAULT_SHARDS
    assert config.budget == DEFAULT_BUDGET
    assert config.parameters["epsilon"] == DEFAULT_EPSILON
    assert config.output["dir"] == "results"
    assert config.model_spec() == "free(2)"


def test_free_product_spec():
    data = base_config()
    data["model"] = {"kind": "free-product", "orders": [2, 3]}
    assert ExperimentConfig.from_dict(data).model_spec() == "free-product(2,3)"


def test_from_yaml(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text(
        "model:\n  kind: free\n  rank: 3\n"
        "experiment:\n  kind: census-barriers\n  id: b\n  shards: 2\n"
        "parameters:\n  f: \"a b\"\n  max_radius: 4\n",
        encoding="utf-8")
    config = ExperimentConfig.from_yaml(str(path))
    assert config.model_spec() == "free(3)"
    assert config.shards == 2
    assert config.parameters["f"] == "a b"
    assert config.parameters["max_radius"] == 4


def test_missing_yaml(tmp_path):
    with pytest.raises(ConfigError, match="无法读取配置文件"):
        ExperimentConfig.from_yaml(str(tmp_path / "missing.yaml"))


@pytest.mark.parametrize("model", [
    {"kind": "free", "rank": 1},
    {"kind": "free-product", "orders": [2, 2]},
    {"kind": "free-product", "orders": [3]},
    {"kind": "surface"},
])
def test_rejects_elementary_or_unknown_models(model):
    data = base_config()
    data["model"] = model
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_missing_sections():
    with pytest.raises(ConfigError, match="model.kind"):
        ExperimentConfig.from_dict({"experiment": {"kind": "series"}})
    with pytest.raises(ConfigError, match="experiment.kind"):
        ExperimentConfig.from_dict({"model": {"kind": "free"}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(["not", "a", "mapping"])


def test_missing_required_parameters():
    data = base_config()
    data["experiment"]["kind"] = "census-fractional"
    data["parameters"] = {"f": "a b"}
    with pytest.raises(ConfigError, match="theta, L"):
        ExperimentConfig.from_dict(data)


@pytest.mark.parametrize("parameters", [{"max_radius": -1}, {"epsilon": -1}, {"M": -2}])
def test_rejects_negative_parameters(parameters):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(base_config(**parameters))


def test_override():
    config = ExperimentConfig.from_dict(base_config())
    updated = config.override(seed=7, shards=None, out_dir="elsewhere", max_radius=3)
    assert updated.seed == 7
    assert updated.shards == DEFAULT_SHARDS
    assert updated.output["dir"] == "elsewhere"
    assert updated.parameters["max_radius"] == 3
    # 原配置不变
    assert config.output["dir"] == "results"
    with pytest.raises(ConfigError):
        config.override(shards=0)


def test_to_dict_round_trip():
    config = ExperimentConfig.from_dict(base_config(max_radius=5))
    assert ExperimentConfig.from_dict(config.to_dict()) == config

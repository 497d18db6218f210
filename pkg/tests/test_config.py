import dataclasses

import pytest

from compsearch.config import ConfigError, LoopConfig, config_from_mapping, load_config
from compsearch.datasets import TASKS


def test_demo_config_lists_every_default(demo_config):
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    data = tomllib.loads(demo_config.read_text())
    fields = {f.name for f in dataclasses.fields(LoopConfig)}
    assert set(data) == fields
    cfg = load_config(demo_config)
    default = LoopConfig()
    for name in fields - {"corpus"}:
        assert getattr(cfg, name) == getattr(default, name) or name == "baseline_set", name
    assert cfg.baseline_set == "activation-default" == default.baseline_set
    assert cfg.corpus.endswith("demo_activation.txt") and cfg.corpus.startswith("/")


@pytest.mark.parametrize("bad", [
    {"kind": "optimizer"}, {"prompt_style": "XYZ"}, {"alpha": 1.5}, {"window": 0},
    {"top_k": 30, "iteration2_batch": 10}, {"top_k": 0}, {"random_shuffles": 0}, {"unknown_key": 1},
    {"pooling": "weird"}, {"n_score": "max"},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        config_from_mapping(bad)


def test_overrides_and_missing_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "regularizer"\nseed = 3\n')
    cfg = load_config(path, seed=9)
    assert cfg.seed == 9 and cfg.baseline_set == "regularizer-default"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    path.write_text("kind = ")
    with pytest.raises(ConfigError):
        load_config(path)


def test_protocol_and_ranker_views():
    cfg = LoopConfig(runs=5, protocol_mode="single-step", ranker_epochs=10)
    assert cfg.protocol.runs == 5 and cfg.protocol.mode == "single-step"
    assert cfg.ranker.epochs == 10
    with pytest.raises(ConfigError):
        LoopConfig(protocol_mode="nope").protocol
    with pytest.raises(ConfigError):
        LoopConfig().endpoint


def test_extra_task_registration():
    cfg = config_from_mapping({"extra_tasks": ["iris-copy:iris.csv:classification:4:3"]})
    assert "iris-copy" in TASKS and TASKS["iris-copy"].n_classes == 3
    assert cfg.extra_tasks == ("iris-copy:iris.csv:classification:4:3",)
    del TASKS["iris-copy"]

#!/usr/bin/env python3
"""
Test configuration loading, overrides and validation
"""

import os
import sys

import pytest
import yaml

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from core.config import Config, RunConfig, known_keys, parse_key_value_text
from core.errors import ConfigError
from core.utils.logger import configure_sinks, setup_logger

HERE = os.path.dirname(os.path.abspath(__file__))

YAML_TEXT = """
seed: 7
network: amosnet-mini
train:
  base_lr: 0.02
  max_iters: 300
augment:
  resize_to: 72
  crop_to: 64
encoder:
  kind: multiscale
  scales: [1, 2, 4]
eval:
  layers: [conv1, fc7]
"""

KV_TEXT = """
# same run as YAML_TEXT
seed=7
network=amosnet-mini
train.base_lr=0.02
train.max_iters=300
augment.resize_to=72
augment.crop_to=64
encoder.kind=multiscale
encoder.scales=1,2,4
eval.layers=conv1,fc7
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults():
    run = Config().run
    assert run == RunConfig()
    assert run.train.base_lr == 0.01
    assert run.encoder.scales == (1, 2, 3, 4)
    assert run.augment.crop_to == 227


def test_yaml_and_key_value_files_agree(tmp_path):
    from_yaml = Config(write(tmp_path, "run.yaml", YAML_TEXT)).run
    from_kv = Config(write(tmp_path, "run.conf", KV_TEXT)).run
    assert from_yaml == from_kv
    assert from_yaml.encoder.scales == (1, 2, 4)
    assert from_yaml.eval.layers == ("conv1", "fc7")
    assert from_yaml.train.momentum == 0.9


def test_shipped_configs_load():
    example = Config(os.path.join(HERE, "config", "config.example.yaml"))
    assert example.run.network == "amosnet"
    toy = Config(os.path.join(HERE, "config", "toy.conf")).run
    assert toy.network == "amosnet-mini"
    assert (toy.augment.resize_to, toy.augment.crop_to) == (72, 64)


def test_overrides_win_and_track_what_was_set(tmp_path):
    config = Config(write(tmp_path, "run.conf", KV_TEXT), {"train.base_lr": "0.5", "workers": None})
    assert config.run.train.base_lr == 0.5
    assert config.is_set("seed")
    assert not config.is_set("workers")
    config.override({"workers": 4})
    assert config.run.workers == 4


def test_global_seed_fills_unset_section_seeds(tmp_path):
    run = Config(overrides={"seed": 5}).run
    assert (run.seed, run.train.seed, run.toy.seed) == (5, 5, 5)
    run = Config(overrides={"seed": 5, "train.seed": 2}).run
    assert (run.train.seed, run.toy.seed) == (2, 5)
    from_file = Config(write(tmp_path, "run.conf", KV_TEXT))
    assert from_file.run.train.seed == 7
    assert not from_file.is_set("train.seed")
    assert Config().run.train.seed == RunConfig().train.seed


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigError, match="train.learning_rate"):
        Config(write(tmp_path, "bad.conf", "train.learning_rate=0.1\n"))
    with pytest.raises(ConfigError):
        Config(write(tmp_path, "bad.yaml", "train:\n  speed: 3\n"))
    with pytest.raises(ConfigError):
        Config(overrides={"colour": "red"})


@pytest.mark.parametrize("key,value", [
    ("train.batch_size", "0"),
    ("train.batch_size", "many"),
    ("train.lr_factor", "1.5"),
    ("augment.crop_to", "300"),
    ("encoder.kind", "vlad"),
    ("encoder.scales", "2,1"),
    ("eval.metric", "manhattan"),
    ("network", "vgg"),
    ("workers", "0"),
    ("toy.shift_max", "40"),
])
def test_bad_values_are_rejected(key, value):
    with pytest.raises(ConfigError):
        Config(overrides={key: value})


def test_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        Config(write(tmp_path, "bad.conf", "train.base_lr 0.1\n"))
    with pytest.raises(ConfigError):
        Config(write(tmp_path, "bad.yaml", "train: [1, 2\n"))
    with pytest.raises(ConfigError):
        Config(write(tmp_path, "list.yaml", "- 1\n- 2\n"))
    with pytest.raises(ConfigError):
        Config(str(tmp_path / "missing.yaml"))


def test_value_coercion():
    run = Config(overrides={"augment.flip": "yes", "split.black_threshold": "10/255", "toy.seed": 3.0}).run
    assert run.augment.flip is True
    assert run.split.black_threshold == pytest.approx(10 / 255)
    assert run.toy.seed == 3
    with pytest.raises(ConfigError):
        Config(overrides={"toy.seed": 2.5})


def test_key_value_parser():
    assert parse_key_value_text("a=1\n\n# note\nb = x=y  # tail\n") == {"a": "1", "b": "x=y"}
    with pytest.raises(ConfigError, match=":2:"):
        parse_key_value_text("a=1\nbroken\n", "run.conf")


def test_save_round_trips(tmp_path):
    config = Config(write(tmp_path, "run.yaml", YAML_TEXT))
    out = tmp_path / "saved" / "effective.yaml"
    config.save(str(out))
    data = yaml.safe_load(out.read_text())
    assert data["encoder"]["scales"] == [1, 2, 4]
    assert Config(str(out)).run == config.run


def test_known_keys_cover_every_section():
    keys = known_keys()
    assert "seed" in keys
    assert "train.base_lr" in keys
    assert "encoder.scales" in keys
    assert "logging.level" in keys
    assert len(keys) == len(set(keys))


def test_log_file_sink(tmp_path):
    log_file = tmp_path / "logs" / "run.log"
    log = setup_logger("test_config", level="DEBUG", log_file=str(log_file))
    log.debug("sink check")
    configure_sinks()
    assert "sink check" in log_file.read_text()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

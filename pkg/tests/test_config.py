"""Flat key = value configs, overrides, and runtime settings."""

import pytest

from app.config import ExperimentConfig, config_from_mapping, load_config, parse_key_values, render_config
from app.errors import ConfigError
from app.settings import Settings


def test_defaults():
    config = load_config(None)
    assert config.model.encoder == "char_cnn"
    assert config.model.pooling == "max"
    assert config.train.optimizer == "adam"
    assert config.train.cut_frac == 0.1 and config.train.ratio == 32.0
    assert config.preprocess.lowercase is False


def test_file_round_trip(tmp_path):
    path = tmp_path / "toy.conf"
    path.write_text("# toy\nword_dim = 16\ncnn_filter_widths = 1,2\ncnn_filter_counts = 4,4\nstrip_emoji = true\n")
    config = load_config(str(path))
    assert config.model.word_dim == 16
    assert config.model.cnn_filter_widths == [1, 2]
    assert config.preprocess.strip_emoji is True
    again = tmp_path / "again.conf"
    again.write_text(render_config(config))
    assert load_config(str(again)) == config


def test_unknown_key_is_an_error():
    with pytest.raises(ConfigError, match="dropout_wrod"):
        config_from_mapping({"dropout_wrod": "0.3"})


def test_bad_value_is_an_error():
    with pytest.raises(ConfigError):
        config_from_mapping({"lstm_hidden": "zero"})
    with pytest.raises(ConfigError):
        config_from_mapping({"dropout_fc": "1.0"})


def test_filter_lists_must_line_up():
    with pytest.raises(ConfigError):
        config_from_mapping({"cnn_filter_widths": "1,2,3", "cnn_filter_counts": "4,4"})


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_key_values("a = 1\na = 2")
    with pytest.raises(ConfigError, match=":1:"):
        parse_key_values("no equals sign")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.conf"))


def test_overrides():
    config = ExperimentConfig().with_overrides({"lstm_hidden": 8, "strip_emoji": True, "seed": "3"})
    assert config.model.lstm_hidden == 8
    assert config.preprocess.strip_emoji is True
    assert config.train.seed == 3
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides({"nope": 1})


def test_pooled_dim():
    assert ExperimentConfig().model.pooled_dim == 2 * 128
    assert ExperimentConfig().with_overrides({"pooling": "concat_max_mean_last"}).model.pooled_dim == 6 * 128


def test_flat_view_has_every_key():
    flat = ExperimentConfig().to_flat()
    assert {"encoder", "lstm_hidden", "cut_frac", "seed", "strip_emoji"} <= set(flat)
    assert flat["vectors_path"] == ""


def test_settings_from_env(monkeypatch):
    monkeypatch.setenv("IEST_JOBS", "4")
    monkeypatch.setenv("IEST_PROGRESS", "false")
    monkeypatch.setenv("IEST_CHECKPOINT", "model.ckpt")
    settings = Settings.from_env()
    assert settings.jobs == 4
    assert settings.progress is False
    assert settings.checkpoint == "model.ckpt"

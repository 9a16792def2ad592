"""Sweep specs, presets, and a real (tiny) sweep run."""

import json
import math

import pytest

import app.sweep as sweep_module
from app.errors import ConfigError, NumericalError
from app.sweep import (
    SweepCell,
    SweepSpec,
    dropout_preset,
    hidden_preset,
    load_sweep_spec,
    optimizer_preset,
    run_sweep,
)

from tests.helpers import synthetic


def test_dropout_grid_is_three_by_three():
    spec = dropout_preset()
    assert len(spec.cells) == 9
    first = spec.cells[0].overrides
    assert first["dropout_word"] == first["dropout_fc"]
    assert {c.overrides["dropout_sentence"] for c in spec.cells} == {"0.1", "0.3", "0.5"}


def test_optimizer_preset_is_sgd_at_four_rates():
    spec = optimizer_preset()
    assert [c.overrides["sgd_lr"] for c in spec.cells] == ["1.0", "0.1", "0.01", "0.001"]
    assert all(c.overrides["optimizer"] == "sgd" for c in spec.cells)


def test_hidden_preset_skips_the_base_size(toy_config):
    sizes = [int(c.overrides["lstm_hidden"]) for c in hidden_preset(toy_config).cells]
    assert sizes == [4, 8, 32]


def test_duplicate_cell_names(toy_config):
    spec = SweepSpec(cells=[SweepCell(name="a"), SweepCell(name="a")])
    with pytest.raises(ConfigError, match="duplicate"):
        spec.resolve(toy_config)
    with pytest.raises(ConfigError, match="base"):
        SweepSpec(cells=[SweepCell(name="base")]).resolve(toy_config)


def test_typos_fail_before_training(toy_config):
    spec = SweepSpec(cells=[SweepCell(name="x", overrides={"lstm_hiden": "8"})])
    with pytest.raises(ConfigError, match="lstm_hiden"):
        spec.resolve(toy_config)


def test_spec_from_json(tmp_path, toy_config):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"name": "mine", "base": {"epochs": 1}, "cells": [{"name": "wide", "overrides": {"lstm_hidden": 32}}]}))
    spec = load_sweep_spec(str(path), toy_config)
    assert spec.name == "mine"
    assert spec.base == {"epochs": "1"}
    assert spec.cells[0].overrides == {"lstm_hidden": "32"}


def test_unknown_spec_source(tmp_path, toy_config):
    with pytest.raises(ConfigError, match="neither a preset"):
        load_sweep_spec("nope", toy_config)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_sweep_spec(str(bad), toy_config)


def _quick(toy_config):
    return toy_config.with_overrides({"epochs": 1})


def test_sweep_runs_base_first(db, toy_config):
    spec = SweepSpec(cells=[SweepCell(name="no_emoji", overrides={"strip_emoji": "true"})])
    rows = run_sweep(spec, _quick(toy_config), synthetic(60, seed=1), synthetic(30, seed=2), db)
    assert [r.name for r in rows] == ["base", "no_emoji"]
    assert rows[0].delta == 0.0
    assert rows[1].overrides == {"strip_emoji": "true"}
    assert rows[1].delta == pytest.approx(100 * (rows[1].accuracy - rows[0].accuracy))


def test_diverging_cell_gives_a_nan_row(db, toy_config, monkeypatch):
    real_fit = sweep_module.fit

    def flaky_fit(train, val, config, **kwargs):
        if config.model.lstm_hidden == 8:
            raise NumericalError("non-finite loss")
        return real_fit(train, val, config, **kwargs)

    monkeypatch.setattr(sweep_module, "fit", flaky_fit)
    spec = SweepSpec(cells=[SweepCell(name="narrow", overrides={"lstm_hidden": "8"})])
    rows = run_sweep(spec, _quick(toy_config), synthetic(60, seed=1), synthetic(30, seed=2), db)
    assert not math.isnan(rows[0].accuracy)
    assert math.isnan(rows[1].accuracy) and math.isnan(rows[1].delta)

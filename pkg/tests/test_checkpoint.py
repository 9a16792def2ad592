"""Checkpoint container: round trips, stored config, corruption."""

import numpy as np
import pytest

from app.errors import DataFormatError
from app.model.checkpoint import (
    MAGIC,
    load_experiment_config,
    load_model,
    read_container,
    save_model,
    write_container,
)
from app.model.classifier import IESTClassifier
from app.model.encoder import Vocabulary

BATCH = [["so", "__TRIGGERWORD__", "😂"], ["ugh", "#mondays"]]


def test_model_round_trip(tmp_path, toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=4)
    path = tmp_path / "m.ckpt"
    save_model(model, str(path), toy_config)
    loaded = load_model(str(path))
    assert set(loaded.params) == set(model.params)
    assert np.array_equal(loaded.predict_proba(BATCH), model.predict_proba(BATCH))
    assert load_experiment_config(str(path)) == toy_config


def test_saving_twice_gives_identical_bytes(tmp_path, toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=4)
    save_model(model, str(tmp_path / "a.ckpt"), toy_config)
    save_model(model, str(tmp_path / "b.ckpt"), toy_config)
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_lookup_model_keeps_its_vocabulary(tmp_path, toy_config):
    config = toy_config.with_overrides({"encoder": "embedding_lookup"})
    model = IESTClassifier.initialize(config.model, seed=0, vocab=Vocabulary.build(BATCH))
    path = tmp_path / "lookup.ckpt"
    save_model(model, str(path), config)
    loaded = load_model(str(path))
    assert loaded.vocab.words() == model.vocab.words()
    assert np.array_equal(loaded.predict_proba(BATCH), model.predict_proba(BATCH))


def test_container_tensors(tmp_path):
    path = tmp_path / "c.bin"
    write_container(str(path), {"kind": "test"}, {"x": np.arange(6, dtype=np.float32).reshape(2, 3)})
    meta, tensors = read_container(str(path))
    assert meta == {"kind": "test"}
    assert tensors["x"].tolist() == [[0, 1, 2], [3, 4, 5]]
    assert path.read_bytes().startswith(MAGIC)


def test_wrong_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOTAMODEL")
    with pytest.raises(DataFormatError, match="IESTM1"):
        read_container(str(path))


def test_truncated_checkpoint(tmp_path, toy_config):
    path = tmp_path / "m.ckpt"
    save_model(IESTClassifier.initialize(toy_config.model, seed=0), str(path), toy_config)
    path.write_bytes(path.read_bytes()[:100])
    with pytest.raises(DataFormatError):
        load_model(str(path))


def test_proba_container_is_not_a_model(tmp_path):
    path = tmp_path / "p.proba"
    write_container(str(path), {"kind": "proba"}, {"proba": np.zeros((1, 6), dtype=np.float32)})
    with pytest.raises(DataFormatError, match="not a model"):
        load_model(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_model(str(tmp_path / "nope.ckpt"))

"""Shared fixtures: the bundled emoji table, toy configs, tiny datasets."""

import pytest

from app.config import ExperimentConfig, config_from_mapping
from app.tokenizer import TweetTokenizer, load_emoji_db
from app.utils.dataset import prepare_examples

from tests.helpers import TINY, TOY, synthetic


@pytest.fixture(scope="session")
def db():
    return load_emoji_db()


@pytest.fixture(scope="session")
def tokenizer(db):
    return TweetTokenizer(db)


@pytest.fixture
def toy_config() -> ExperimentConfig:
    return config_from_mapping(TOY)


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    """float64, no dropout, very small. For gradient checks."""
    return config_from_mapping(TINY)


@pytest.fixture(scope="session")
def small_split(tokenizer):
    """300 train / 60 val synthetic tweets, tokenized."""
    train = prepare_examples(synthetic(300, seed=1), tokenizer)
    val = prepare_examples(synthetic(60, seed=2), tokenizer)
    return train, val

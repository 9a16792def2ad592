"""Test helpers that aren't fixtures."""

from typing import List

import numpy as np

from app.schemas import EMOTIONS, RawTweet
from app.utils.dataset import LabeledSet
from app.utils.synthetic import SyntheticSpec, generate_synthetic

# small enough to train in seconds, big enough to learn the cue words
TOY = {
    "char_emb_dim": "8",
    "cnn_filter_widths": "1,2,3",
    "cnn_filter_counts": "8,8,8",
    "word_dim": "16",
    "lstm_hidden": "16",
    "fc_hidden": "16",
    "epochs": "3",
    "batch_size": "16",
    "lr_max": "0.01",
}

TINY = {
    "char_emb_dim": "3",
    "cnn_filter_widths": "1,2",
    "cnn_filter_counts": "2,3",
    "max_word_chars": "6",
    "word_dim": "4",
    "lstm_hidden": "3",
    "fc_hidden": "4",
    "dropout_word": "0",
    "dropout_sentence": "0",
    "dropout_fc": "0",
    "dtype": "float64",
}


def synthetic(num: int, seed: int, **kwargs) -> List[RawTweet]:
    return generate_synthetic(SyntheticSpec(num=num, seed=seed, **kwargs))


def random_labeled_set(n: int, seed: int) -> LabeledSet:
    rng = np.random.default_rng(seed)
    words = ["so", "sad", "happy", "why", "__TRIGGERWORD__", "again", "#fml", "ugh"]
    tokens = [[words[i] for i in rng.integers(len(words), size=int(rng.integers(1, 6)))] for _ in range(n)]
    return LabeledSet(tokens=tokens, labels=rng.integers(len(EMOTIONS), size=n).astype(np.int64))


def write_tsv(path, tweets: List[RawTweet]) -> str:
    path.write_text("".join(f"{t.label}\t{t.text}\n" for t in tweets), encoding="utf-8")
    return str(path)

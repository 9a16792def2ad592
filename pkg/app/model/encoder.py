"""
Word encoders - turning token strings into vectors.

Two flavours:

- char_cnn: each word is read as UTF-8 bytes (plus begin/end markers),
  embedded, convolved with filters of several widths, max-pooled over
  positions, and projected to word_dim. Any string has bytes, so there is
  no such thing as an unknown word.
- embedding_lookup: the plain table baseline. Words seen in training get a
  row; everything else shares the <unk> row.
"""

from collections import Counter
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from app.config import ModelConfig
from app.nn import tensor as T

PAD_CHAR, BOW_CHAR, EOW_CHAR = 0, 1, 2
BYTE_OFFSET = 3
CHAR_VOCAB_SIZE = 256 + BYTE_OFFSET

PAD_WORD, UNK_WORD = "<pad>", "<unk>"


class EncodedBatch(NamedTuple):
    vectors: T.Tensor  # [batch x T x word_dim]
    lengths: np.ndarray  # valid steps per example


class Vocabulary:
    """Frequency-ordered word list for the lookup encoder. Index 0 pads, 1 is unknown."""

    def __init__(self, words: Sequence[str]):
        self.itos: List[str] = [PAD_WORD, UNK_WORD] + [w for w in words if w not in (PAD_WORD, UNK_WORD)]
        self.stoi: Dict[str, int] = {w: i for i, w in enumerate(self.itos)}

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]], min_count: int = 1) -> "Vocabulary":
        counts = Counter(word for seq in sequences for word in seq)
        kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
        return cls(kept)

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, words: Sequence[str]) -> List[int]:
        return [self.stoi.get(w, 1) for w in words]

    def words(self) -> List[str]:
        return self.itos[2:]


def word_char_ids(word: str, max_chars: int) -> List[int]:
    """[BOW] + UTF-8 bytes of the first max_chars characters + [EOW]."""
    data = word[:max_chars].encode("utf-8")
    return [BOW_CHAR] + [b + BYTE_OFFSET for b in data] + [EOW_CHAR]


def _check_lengths(batch: Sequence[Sequence[str]]) -> np.ndarray:
    if not batch:
        raise ValueError("cannot encode an empty batch")
    lengths = np.array([len(seq) for seq in batch], dtype=np.int64)
    if lengths.min() < 1:
        raise ValueError("every example needs at least one token")
    return lengths


def char_cnn_words(words: Sequence[str], params: Dict[str, T.Tensor], config: ModelConfig) -> T.Tensor:
    """Encode distinct words with the character CNN -> [len(words) x word_dim]."""
    char_rows = [word_char_ids(w, config.max_word_chars) for w in words]
    width = max(max(len(r) for r in char_rows), max(config.cnn_filter_widths))
    chars = np.full((len(words), width), PAD_CHAR, dtype=np.int64)
    n_chars = np.array([len(r) for r in char_rows], dtype=np.int64)
    for i, row in enumerate(char_rows):
        chars[i, : len(row)] = row

    table = params["encoder.char_embedding"]
    features = []
    for w, count in zip(config.cnn_filter_widths, config.cnn_filter_counts):
        positions = width - w + 1
        windows = chars[:, np.arange(positions)[:, None] + np.arange(w)[None, :]]  # [U x P x w]
        emb = T.embedding(table, windows)  # [U x P x w x e]
        flat = T.reshape(emb, (len(words) * positions, w * config.char_emb_dim))
        conv = T.bias_add(T.matmul(flat, params[f"encoder.conv{w}.weight"]), params[f"encoder.conv{w}.bias"])
        conv = T.reshape(conv, (len(words), positions, count))
        valid = np.clip(n_chars - w + 1, 1, positions)
        features.append(T.relu(T.masked_max_pool(conv, valid)))

    merged = T.concat(features, axis=-1) if len(features) > 1 else features[0]
    return T.bias_add(T.matmul(merged, params["encoder.proj.weight"]), params["encoder.proj.bias"])


def encode_words(batch: Sequence[Sequence[str]], params: Dict[str, T.Tensor], config: ModelConfig,
                 train: bool = False, rng: Optional[np.random.Generator] = None,
                 vocab: Optional[Vocabulary] = None) -> EncodedBatch:
    """
    Token sequences -> padded [batch x T x word_dim] word vectors, word dropout applied.

    Args:
        batch: Token texts per example; each non-empty
        params: Model parameter registry
        config: Decides the encoder flavour and sizes
        train: Apply dropout_word
        rng: Dropout stream (train mode only)
        vocab: Required for embedding_lookup
    """
    lengths = _check_lengths(batch)
    steps = int(lengths.max())

    if config.encoder == "char_cnn":
        distinct: Dict[str, int] = {}
        for seq in batch:
            for word in seq:
                distinct.setdefault(word, len(distinct))
        ids = np.zeros((len(batch), steps), dtype=np.int64)
        for b, seq in enumerate(batch):
            ids[b, : len(seq)] = [distinct[w] for w in seq]
        word_table = char_cnn_words(list(distinct), params, config)
        vectors = T.embedding(word_table, ids)
    else:
        if vocab is None:
            raise ValueError("embedding_lookup encoder needs a vocabulary")
        ids = np.zeros((len(batch), steps), dtype=np.int64)
        for b, seq in enumerate(batch):
            ids[b, : len(seq)] = vocab.encode(seq)
        vectors = T.embedding(params["encoder.embedding"], ids)

    vectors = T.dropout(vectors, config.dropout_word, train, rng)
    return EncodedBatch(vectors=vectors, lengths=lengths)

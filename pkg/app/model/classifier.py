"""
The classifier: word encoder -> BiLSTM -> pooling -> two-layer head.

    tokens ─► encode_words ─► dropout(word) ─► BiLSTM ─► pool ─► dropout(sentence)
           ─► W1 ─► ReLU ─► dropout(fc) ─► W2 ─► 6 logits

IESTClassifier owns the parameter registry and the vocabulary (lookup
encoder only). Everything numeric goes through app.nn, so the whole stack
can be gradient-checked end to end in float64.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import ModelConfig
from app.model.encoder import CHAR_VOCAB_SIZE, Vocabulary, encode_words
from app.model.lstm import DIRECTIONS, GATES, bilstm_forward
from app.model.vectors import load_word_vectors
from app.nn import tensor as T
from app.nn.rng import make_rng
from app.schemas import NUM_CLASSES

TokenBatch = Sequence[Sequence[str]]

PREDICT_BATCH = 256


def _uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> T.Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return T.Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


def _constant(shape, value: float, dtype) -> T.Tensor:
    return T.Tensor(np.full(shape, value, dtype=dtype), requires_grad=True)


def init_params(config: ModelConfig, rng: np.random.Generator, vocab_size: int = 0) -> Dict[str, T.Tensor]:
    """
    Fresh parameter registry. Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
    biases zero, forget-gate bias at config.forget_bias.
    """
    dtype = np.dtype(config.dtype)
    params: Dict[str, T.Tensor] = {}

    if config.encoder == "char_cnn":
        params["encoder.char_embedding"] = _uniform(rng, (CHAR_VOCAB_SIZE, config.char_emb_dim), config.char_emb_dim, dtype)
        for w, count in zip(config.cnn_filter_widths, config.cnn_filter_counts):
            fan_in = w * config.char_emb_dim
            params[f"encoder.conv{w}.weight"] = _uniform(rng, (fan_in, count), fan_in, dtype)
            params[f"encoder.conv{w}.bias"] = _constant((count,), 0.0, dtype)
        total = sum(config.cnn_filter_counts)
        params["encoder.proj.weight"] = _uniform(rng, (total, config.word_dim), total, dtype)
        params["encoder.proj.bias"] = _constant((config.word_dim,), 0.0, dtype)
    else:
        if vocab_size < 2:
            raise ValueError("embedding_lookup needs a vocabulary (pad + unk at least)")
        params["encoder.embedding"] = _uniform(rng, (vocab_size, config.word_dim), config.word_dim, dtype)

    hidden = config.lstm_hidden
    for direction in DIRECTIONS:
        for gate in GATES:
            params[f"lstm.{direction}.W_{gate}"] = _uniform(rng, (config.word_dim, hidden), config.word_dim, dtype)
        for gate in GATES:
            params[f"lstm.{direction}.U_{gate}"] = _uniform(rng, (hidden, hidden), hidden, dtype)
        for gate in GATES:
            bias = config.forget_bias if gate == "f" else 0.0
            params[f"lstm.{direction}.b_{gate}"] = _constant((hidden,), bias, dtype)

    params["head.W1"] = _uniform(rng, (config.pooled_dim, config.fc_hidden), config.pooled_dim, dtype)
    params["head.b1"] = _constant((config.fc_hidden,), 0.0, dtype)
    params["head.W2"] = _uniform(rng, (config.fc_hidden, config.num_classes), config.fc_hidden, dtype)
    params["head.b2"] = _constant((config.num_classes,), 0.0, dtype)
    return params


def pool(states: T.Tensor, lengths: np.ndarray, mode: str, dropout_p: float = 0.0,
         train: bool = False, rng: Optional[np.random.Generator] = None) -> T.Tensor:
    """
    [batch x T x 2h] -> sentence vectors.

    max: [batch x 2h]. concat_max_mean_last: [max; mean; last valid state], [batch x 6h].
    """
    if mode == "max":
        pooled = T.masked_max_pool(states, lengths)
    elif mode == "concat_max_mean_last":
        pooled = T.concat(
            [T.masked_max_pool(states, lengths), T.masked_mean_pool(states, lengths), T.last_valid(states, lengths)],
            axis=-1,
        )
    else:
        raise ValueError(f"Unknown pooling mode {mode!r}")
    return T.dropout(pooled, dropout_p, train, rng)


def classify(pooled: T.Tensor, params: Dict[str, T.Tensor], dropout_p: float = 0.0,
             train: bool = False, rng: Optional[np.random.Generator] = None) -> T.Tensor:
    """logits = W2 · dropout(relu(W1 · pooled + b1)) + b2"""
    if pooled.shape[-1] != params["head.W1"].shape[0]:
        raise T.ShapeError(f"classify: pooled dim {pooled.shape[-1]} does not match W1 {params['head.W1'].shape}")
    hidden = T.relu(T.bias_add(T.matmul(pooled, params["head.W1"]), params["head.b1"]))
    hidden = T.dropout(hidden, dropout_p, train, rng)
    return T.bias_add(T.matmul(hidden, params["head.W2"]), params["head.b2"])


class IESTClassifier:
    """
    Parameters + config + (optional) vocabulary, with a forward pass.

    Eval mode is a pure function of (params, input). Train mode draws
    dropout masks from the rng you hand it.
    """

    def __init__(self, config: ModelConfig, params: Dict[str, T.Tensor], vocab: Optional[Vocabulary] = None):
        self.config = config
        self.params = params
        self.vocab = vocab

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0, vocab: Optional[Vocabulary] = None,
                   rng: Optional[np.random.Generator] = None) -> "IESTClassifier":
        rng = rng if rng is not None else make_rng(seed, "init")
        if config.encoder == "embedding_lookup" and vocab is None:
            raise ValueError("embedding_lookup encoder needs a vocabulary")
        params = init_params(config, rng, len(vocab) if vocab is not None else 0)
        if config.encoder == "embedding_lookup" and config.vectors_path:
            table = params["encoder.embedding"]
            seeded, _ = load_word_vectors(config.vectors_path, vocab, config.word_dim, table.data)
            table.data = seeded.astype(table.dtype)
        return cls(config, params, vocab)

    def parameters(self) -> Dict[str, T.Tensor]:
        return self.params

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def restore(self, snapshot: Dict[str, np.ndarray]) -> None:
        for name, value in snapshot.items():
            self.params[name].data = value.copy()

    def forward(self, batch: TokenBatch, train: bool = False,
                rng: Optional[np.random.Generator] = None) -> Tuple[T.Tensor, T.Tensor]:
        """Returns (logits [batch x 6], pooled sentence vectors)."""
        cfg = self.config
        encoded = encode_words(batch, self.params, cfg, train=train, rng=rng, vocab=self.vocab)
        states = bilstm_forward(encoded, self.params)
        pooled = pool(states, encoded.lengths, cfg.pooling, cfg.dropout_sentence, train, rng)
        logits = classify(pooled, self.params, cfg.dropout_fc, train, rng)
        return logits, pooled

    def _chunks(self, batch: TokenBatch, size: int):
        for start in range(0, len(batch), size):
            yield batch[start:start + size]

    def predict_logits(self, batch: TokenBatch, batch_size: int = PREDICT_BATCH) -> np.ndarray:
        out: List[np.ndarray] = [self.forward(chunk)[0].data for chunk in self._chunks(batch, batch_size)]
        return np.concatenate(out, axis=0) if out else np.zeros((0, NUM_CLASSES))

    def predict_proba(self, batch: TokenBatch, batch_size: int = PREDICT_BATCH) -> np.ndarray:
        """Eval-mode softmax, computed in float64 so rows sum to 1 tightly."""
        return T.softmax(self.predict_logits(batch, batch_size).astype(np.float64))

    def sentence_vectors(self, batch: TokenBatch, batch_size: int = PREDICT_BATCH) -> np.ndarray:
        out = [self.forward(chunk)[1].data for chunk in self._chunks(batch, batch_size)]
        return np.concatenate(out, axis=0).astype(np.float64)


def predict_proba(model: IESTClassifier, batch: TokenBatch) -> np.ndarray:
    return model.predict_proba(batch)

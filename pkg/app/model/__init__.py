"""
The model: word encoder, BiLSTM, pooling, classifier head, checkpoints.
"""

from .checkpoint import load_model, read_container, save_model, write_container
from .classifier import IESTClassifier, classify, init_params, pool, predict_proba
from .encoder import EncodedBatch, Vocabulary, encode_words
from .lstm import bilstm_forward, lstm_cell

__all__ = [
    "load_model",
    "read_container",
    "save_model",
    "write_container",
    "IESTClassifier",
    "classify",
    "init_params",
    "pool",
    "predict_proba",
    "EncodedBatch",
    "Vocabulary",
    "encode_words",
    "bilstm_forward",
    "lstm_cell",
]

"""The classifier: LSTM cell and BiLSTM, shapes, eval determinism, encoders, and whole-model gradient checks."""

import numpy as np
import pytest

from app.config import config_from_mapping
from app.errors import DataFormatError
from app.model.classifier import IESTClassifier
from app.model.encoder import EncodedBatch, Vocabulary, word_char_ids
from app.model.lstm import GATES, bilstm_forward, lstm_cell
from app.model.vectors import load_word_vectors
from app.nn import tensor as T
from app.nn.gradcheck import check_gradients
from app.nn.rng import make_rng

from tests.helpers import TINY

BATCH = [
    ["so", "__TRIGGERWORD__", "😂"],
    ["un", "__TRIGGERWORD__"],
    ["why", "is", "everyone", "__TRIGGERWORD__", "#ugh"],
]
TARGETS = np.array([3, 3, 0])


def test_forward_shapes(toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=0)
    logits, pooled = model.forward(BATCH)
    assert logits.shape == (3, 6)
    assert pooled.shape == (3, 2 * toy_config.model.lstm_hidden)


def test_concat_pooling_triples_the_sentence_vector(toy_config):
    cfg = toy_config.with_overrides({"pooling": "concat_max_mean_last"})
    _, pooled = IESTClassifier.initialize(cfg.model, seed=0).forward(BATCH)
    assert pooled.shape == (3, 6 * cfg.model.lstm_hidden)


def test_eval_mode_is_deterministic(toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=3)
    assert np.array_equal(model.predict_proba(BATCH), model.predict_proba(BATCH))


def test_probabilities_are_distributions(toy_config):
    probs = IESTClassifier.initialize(toy_config.model, seed=1).predict_proba(BATCH)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert (probs >= 0).all()


def test_same_seed_same_weights(toy_config):
    a = IESTClassifier.initialize(toy_config.model, seed=5).snapshot()
    b = IESTClassifier.initialize(toy_config.model, seed=5).snapshot()
    c = IESTClassifier.initialize(toy_config.model, seed=6).snapshot()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_forget_bias_starts_at_one(toy_config):
    params = IESTClassifier.initialize(toy_config.model, seed=0).params
    assert np.all(params["lstm.fwd.b_f"].data == 1.0)
    assert np.all(params["lstm.bwd.b_i"].data == 0.0)


def test_padding_does_not_change_a_sentence(toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=2)
    alone = model.predict_proba([BATCH[1]])
    padded = model.predict_proba([BATCH[1], BATCH[2]])[:1]
    assert np.allclose(alone, padded, atol=1e-6)


def test_empty_sentence_rejected(toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=0)
    with pytest.raises(ValueError):
        model.forward([["ok"], []])


def test_char_ids_have_markers():
    ids = word_char_ids("ab", max_chars=10)
    assert ids[0] == 1 and ids[-1] == 2
    assert len(ids) == 4


def test_char_ids_truncate_long_words():
    assert len(word_char_ids("x" * 100, max_chars=5)) == 7


# =============================================
# Lookup encoder and word vectors
# =============================================

def test_vocabulary_orders_by_frequency():
    vocab = Vocabulary.build([["b", "a", "a"], ["c", "a", "b"]])
    assert vocab.words() == ["a", "b", "c"]
    assert vocab.encode(["a", "zzz"]) == [2, 1]


def test_lookup_encoder_needs_vocab(toy_config):
    cfg = toy_config.with_overrides({"encoder": "embedding_lookup"})
    with pytest.raises(ValueError):
        IESTClassifier.initialize(cfg.model, seed=0)


def test_lookup_encoder_forward(toy_config):
    cfg = toy_config.with_overrides({"encoder": "embedding_lookup"})
    vocab = Vocabulary.build(BATCH)
    logits, _ = IESTClassifier.initialize(cfg.model, seed=0, vocab=vocab).forward(BATCH + [["never", "seen"]])
    assert logits.shape == (4, 6)


def test_word_vectors_seed_the_table(tmp_path):
    vocab = Vocabulary(["hello", "world"])
    path = tmp_path / "vecs.txt"
    path.write_text("2 3\nhello 1 2 3\nmissing 0 0 0\n", encoding="utf-8")
    table, found = load_word_vectors(str(path), vocab, 3, np.zeros((4, 3)))
    assert found == 1
    assert table[vocab.stoi["hello"]].tolist() == [1.0, 2.0, 3.0]
    assert table[vocab.stoi["world"]].tolist() == [0.0, 0.0, 0.0]


def test_word_vectors_wrong_dim(tmp_path):
    path = tmp_path / "vecs.txt"
    path.write_text("hello 1 2\n", encoding="utf-8")
    with pytest.raises(DataFormatError):
        load_word_vectors(str(path), Vocabulary(["hello"]), 3, np.zeros((3, 3)))


# =============================================
# LSTM cell and BiLSTM
# =============================================

def _cell_params(n_in, hidden, seed, scale=0.5):
    rng = make_rng(seed, "init")
    params = {}
    for gate in GATES:
        params[f"W_{gate}"] = T.Tensor(rng.uniform(-scale, scale, (n_in, hidden)), requires_grad=True, dtype=np.float64)
        params[f"U_{gate}"] = T.Tensor(rng.uniform(-scale, scale, (hidden, hidden)), requires_grad=True, dtype=np.float64)
        params[f"b_{gate}"] = T.Tensor(rng.uniform(-scale, scale, (hidden,)), requires_grad=True, dtype=np.float64)
    return params


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _f64(shape, seed):
    return T.Tensor(make_rng(seed, "data").standard_normal(shape), requires_grad=True, dtype=np.float64)


def test_zero_cell_stays_at_zero():
    params = {name: T.Tensor(np.zeros_like(p.data)) for name, p in _cell_params(4, 3, seed=0).items()}
    zeros = T.Tensor(np.zeros((2, 3)), dtype=np.float64)
    h, c = lstm_cell(_f64((2, 4), 1), zeros, zeros, params)
    assert np.array_equal(h.data, np.zeros((2, 3)))
    assert np.array_equal(c.data, np.zeros((2, 3)))


def test_saturated_forget_gate_matches_closed_form():
    params = _cell_params(4, 3, seed=2, scale=0.1)
    params["b_f"].data[:] = 10.0
    x, h0, c0 = _f64((2, 4), 3), _f64((2, 3), 4), _f64((2, 3), 5)
    h, c = lstm_cell(x, h0, c0, params)

    def pre(gate):
        return x.data @ params[f"W_{gate}"].data + h0.data @ params[f"U_{gate}"].data + params[f"b_{gate}"].data

    i, f, o, g = _sigmoid(pre("i")), _sigmoid(pre("f")), _sigmoid(pre("o")), np.tanh(pre("g"))
    expected_c = f * c0.data + i * g
    assert np.allclose(c.data, expected_c, atol=1e-12)
    assert np.allclose(h.data, o * np.tanh(expected_c), atol=1e-12)
    # the forget gate is nearly open: the cell just adds i*g to what it had
    assert np.allclose(c.data, c0.data + i * g, atol=1e-3)


def test_gradients_through_three_unrolled_steps():
    params = _cell_params(4, 6, seed=6)
    x = _f64((2, 3, 4), 7)
    h0, c0 = _f64((2, 6), 8), _f64((2, 6), 9)

    def loss_fn():
        h, c = h0, c0
        for t in range(3):
            h, c = lstm_cell(T.time_step(x, t), h, c, params)
        return T.softmax_cross_entropy(h, [1, 4])

    errors = check_gradients(loss_fn, {**params, "x": x, "h0": h0, "c0": c0})
    assert max(errors.values()) < 1e-4, errors


def _bilstm_params(fwd, bwd):
    named = {f"lstm.fwd.{k}": v for k, v in fwd.items()}
    named.update({f"lstm.bwd.{k}": v for k, v in bwd.items()})
    return named


def test_length_one_sequence_is_one_cell_step_each_way():
    fwd, bwd = _cell_params(4, 3, seed=10), _cell_params(4, 3, seed=11)
    x = _f64((1, 1, 4), 12)
    out = bilstm_forward(EncodedBatch(x, np.array([1])), _bilstm_params(fwd, bwd)).data
    zeros = T.Tensor(np.zeros((1, 3)), dtype=np.float64)
    step = T.time_step(x, 0)
    assert np.allclose(out[0, 0, :3], lstm_cell(step, zeros, zeros, fwd)[0].data, atol=1e-12)
    assert np.allclose(out[0, 0, 3:], lstm_cell(step, zeros, zeros, bwd)[0].data, atol=1e-12)


def test_reversed_input_swaps_the_directions():
    shared = _cell_params(4, 3, seed=13)
    params = _bilstm_params(shared, shared)
    x = make_rng(14, "data").standard_normal((1, 5, 4))
    out = bilstm_forward(EncodedBatch(T.Tensor(x, dtype=np.float64), np.array([5])), params).data
    rev = bilstm_forward(EncodedBatch(T.Tensor(x[:, ::-1].copy(), dtype=np.float64), np.array([5])), params).data
    assert np.allclose(out[0, :, :3], rev[0, ::-1, 3:], atol=1e-12)
    assert np.allclose(out[0, :, 3:], rev[0, ::-1, :3], atol=1e-12)


# =============================================
# Head and batch behaviour
# =============================================

def test_zero_head_gives_uniform_probabilities(toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=0)
    for name in ("head.W1", "head.b1", "head.W2", "head.b2"):
        model.params[name].data[:] = 0.0
    probs = model.predict_proba(BATCH)
    assert np.allclose(probs, np.full((3, 6), 1 / 6), atol=1e-7)


def test_reordering_a_batch_reorders_the_output(toy_config):
    model = IESTClassifier.initialize(toy_config.model, seed=4)
    forward = model.predict_proba(BATCH)
    backward = model.predict_proba(BATCH[::-1])[::-1]
    assert np.allclose(forward, backward, atol=1e-6)


# =============================================
# Whole-model gradient check
# =============================================

@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_full_model_gradients(seed):
    cfg = config_from_mapping(TINY).model
    model = IESTClassifier.initialize(cfg, seed=seed)

    def loss_fn():
        logits, _ = model.forward(BATCH)
        return T.softmax_cross_entropy(logits, TARGETS)

    errors = check_gradients(loss_fn, model.params, max_probes=12, rng=make_rng(seed, "gradcheck"))
    assert set(errors) == set(model.params)
    assert max(errors.values()) < 1e-4, errors


def test_concat_pooling_gradients():
    cfg = config_from_mapping({**TINY, "pooling": "concat_max_mean_last"}).model
    model = IESTClassifier.initialize(cfg, seed=7)

    def loss_fn():
        return T.softmax_cross_entropy(model.forward(BATCH)[0], TARGETS)

    errors = check_gradients(loss_fn, model.params, max_probes=8, rng=make_rng(7, "gradcheck"))
    assert max(errors.values()) < 1e-4, errors

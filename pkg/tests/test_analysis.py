"""PCA, clustering, emoji/hashtag effects, the trigger-pattern report, data curves."""

import numpy as np
import pytest

from app.analysis.curves import data_amount_curve, nested_subsamples
from app.analysis.effects import alias_counts, emoji_effects, emoji_removal_effect, group_effect
from app.analysis.patterns import trigger_pattern_report
from app.analysis.pca import explained_summary, pca_project, two_means
from app.schemas import EMOTIONS, RawTweet
from app.training.trainer import fit
from app.utils.dataset import labeled_set, prepare_examples

from tests.helpers import random_labeled_set


# =============================================
# PCA
# =============================================

def _oracle(x, k):
    centered = x - x.mean(axis=0)
    values, vectors = np.linalg.eigh(centered.T @ centered / (x.shape[0] - 1))
    order = np.argsort(values)[::-1][:k]
    basis = vectors[:, order].T
    return values[order], basis, centered


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_pca_matches_dense_eigendecomposition(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((50, 8)) @ np.diag([5, 4, 3, 2, 1, 0.5, 0.3, 0.1])
    projection = pca_project(x, k=3, seed=seed)
    values, basis, centered = _oracle(x, 3)
    assert projection.num_components == 3
    assert np.allclose(projection.eigenvalues, values, rtol=1e-8)
    for axis in range(3):
        ours = projection.coordinates[:, axis]
        theirs = centered @ basis[axis]
        sign = 1.0 if ours @ theirs >= 0 else -1.0
        assert np.max(np.abs(ours - sign * theirs)) < 1e-6


def test_explained_variance_is_non_increasing():
    x = np.random.default_rng(5).standard_normal((50, 8))
    shares = pca_project(x, k=3).explained_variance
    assert all(a >= b for a, b in zip(shares, shares[1:]))
    assert 0 < shares.sum() <= 1.0 + 1e-12


def test_pca_basis_is_orthonormal():
    x = np.random.default_rng(6).standard_normal((40, 6))
    basis = pca_project(x, k=3).basis
    assert np.allclose(basis @ basis.T, np.eye(3), atol=1e-8)


def test_rank_deficient_data_returns_fewer_components():
    rng = np.random.default_rng(1)
    line = np.outer(rng.standard_normal(30), rng.standard_normal(5))
    projection = pca_project(line, k=3)
    assert projection.num_components == 1
    assert projection.coordinates.shape == (30, 1)


def test_constant_data_has_no_components():
    projection = pca_project(np.ones((10, 4)), k=3)
    assert projection.num_components == 0
    assert explained_summary(projection) is None


def test_pca_rejects_bad_shapes():
    with pytest.raises(ValueError):
        pca_project(np.zeros(5), k=3)
    with pytest.raises(ValueError):
        pca_project(np.zeros((2, 4)), k=3)


def test_pca_is_deterministic():
    x = np.random.default_rng(9).standard_normal((30, 5))
    a, b = pca_project(x, seed=4), pca_project(x, seed=4)
    assert np.array_equal(a.coordinates, b.coordinates)


def test_two_means_separates_blobs():
    rng = np.random.default_rng(0)
    points = np.vstack([rng.normal(0, 0.1, (20, 3)), rng.normal(5, 0.1, (10, 3))])
    clusters = two_means(points, seed=1)
    assert len(set(clusters[:20])) == 1
    assert len(set(clusters[20:])) == 1
    assert clusters[0] != clusters[20]


def test_two_means_degenerate_input():
    assert two_means(np.zeros((1, 3))).tolist() == [0]


# =============================================
# Group and emoji effects
# =============================================

class FixedModel:
    """Says joy when it sees 😂, sad otherwise."""

    def predict_proba(self, batch):
        out = np.full((len(batch), 6), 0.01)
        for i, words in enumerate(batch):
            out[i, EMOTIONS.index("joy" if "😂" in words else "sad")] = 0.95
        return out


def _examples(tokenizer, rows):
    return prepare_examples([RawTweet(text=t, label=l) for l, t in rows], tokenizer)


def test_group_effect(tokenizer):
    examples = _examples(tokenizer, [("joy", "yay 😂"), ("sad", "meh 😂"), ("sad", "meh"), ("fear", "#eek")])
    effect = group_effect(examples, ["joy", "joy", "sad", "sad"], "has_emoji")
    assert (effect.count_present, effect.accuracy_present) == (2, 0.5)
    assert (effect.count_absent, effect.accuracy_absent) == (2, 0.5)


def test_group_effect_with_empty_side(tokenizer):
    examples = _examples(tokenizer, [("joy", "no emoji here")])
    effect = group_effect(examples, ["joy"], "has_emoji")
    assert effect.count_present == 0 and effect.accuracy_present is None


def test_emoji_removal_effect(db, tokenizer):
    examples = _examples(tokenizer, [("joy", "yay 😂"), ("joy", "great 😂"), ("sad", "meh 😂"), ("sad", "meh")])
    effect = emoji_removal_effect(FixedModel(), examples, "joy", db)
    assert effect.n == 3
    assert effect.correct_with == 2
    assert effect.correct_without == 1
    assert effect.delta == pytest.approx(100 * (1 / 3 - 2 / 3))


def test_emoji_removal_needs_the_alias(db, tokenizer):
    examples = _examples(tokenizer, [("joy", "yay")])
    with pytest.raises(ValueError):
        emoji_removal_effect(FixedModel(), examples, "joy", db)


def test_emoji_removal_refuses_to_empty_a_tweet(db, tokenizer):
    examples = _examples(tokenizer, [("joy", "😂")])
    with pytest.raises(ValueError):
        emoji_removal_effect(FixedModel(), examples, "joy", db)


def test_alias_counts_count_tweets_not_occurrences(tokenizer):
    examples = _examples(tokenizer, [("joy", "😂😂😂 ok"), ("sad", "😭 and 😂")])
    counts = alias_counts(examples)
    assert counts["joy"] == 2
    assert counts["sob"] == 1


def test_emoji_effects_threaded_matches_serial(db, tokenizer):
    examples = _examples(tokenizer, [("joy", "yay 😂"), ("sad", "so 😭"), ("sad", "again 😭 😂")])
    serial = emoji_effects(FixedModel(), examples, db, jobs=1)
    threaded = emoji_effects(FixedModel(), examples, db, jobs=3)
    assert [e.alias for e in serial] == ["joy", "sob"]
    assert [e.model_dump() for e in serial] == [e.model_dump() for e in threaded]


def test_emoji_effects_min_count(db, tokenizer):
    examples = _examples(tokenizer, [("joy", "yay 😂"), ("sad", "so 😭"), ("sad", "again 😂")])
    assert [e.alias for e in emoji_effects(FixedModel(), examples, db, min_count=2)] == ["joy"]


# =============================================
# Trigger pattern
# =============================================

def test_trigger_report_counts_and_scores(tokenizer):
    rows = [
        ("joy", "so un[#TRIGGERWORD#] today"),
        ("joy", "un[#TRIGGERWORD#] again"),
        ("sad", "feeling un [#TRIGGERWORD#]"),
        ("anger", "why [#TRIGGERWORD#]"),
    ]
    examples = _examples(tokenizer, rows)
    report = trigger_pattern_report(examples, ["joy", "joy", "joy", "anger"])
    assert report.count == 3
    assert report.gold_histogram == {"joy": 2, "sad": 1}
    assert report.accuracy == pytest.approx(2 / 3)
    assert report.predicted_joy_share == 1.0
    assert report.single_cluster is None


def test_trigger_report_without_pattern(tokenizer):
    report = trigger_pattern_report(_examples(tokenizer, [("joy", "plain [#TRIGGERWORD#]")]), ["joy"])
    assert report.count == 0
    assert report.accuracy is None


def test_trigger_report_clusters_separable_vectors(tokenizer):
    rows = [("joy", f"un[#TRIGGERWORD#] {i}") for i in range(5)]
    rows += [(EMOTIONS[i % 6], f"plain [#TRIGGERWORD#] {i}") for i in range(15)]
    examples = _examples(tokenizer, rows)
    rng = np.random.default_rng(0)
    vectors = np.vstack([rng.normal(4, 0.1, (5, 6)), rng.normal(0, 0.1, (15, 6))])
    report = trigger_pattern_report(examples, ["joy"] * 20, vectors, seed=0)
    assert report.single_cluster is True
    assert report.cluster_purity == 1.0
    assert report.cluster_coverage == 1.0


def test_trigger_report_vector_count_mismatch(tokenizer):
    examples = _examples(tokenizer, [("joy", "un[#TRIGGERWORD#]"), ("sad", "x")])
    with pytest.raises(ValueError):
        trigger_pattern_report(examples, ["joy", "sad"], np.zeros((3, 4)))


# =============================================
# Data-amount curves
# =============================================

def test_subsamples_are_nested():
    subsets = nested_subsamples(100, [0.1, 0.5, 1.0], seed=3)
    assert len(subsets[0.1]) == 10 and len(subsets[0.5]) == 50
    assert set(subsets[0.1]) <= set(subsets[0.5]) <= set(subsets[1.0])
    assert subsets[1.0] == list(range(100))


def test_subsample_fractions_must_be_in_range():
    with pytest.raises(ValueError):
        nested_subsamples(10, [0.0], seed=0)
    with pytest.raises(ValueError):
        nested_subsamples(10, [1.5], seed=0)


def test_full_fraction_reproduces_a_plain_fit(toy_config):
    train, val = random_labeled_set(30, 0), random_labeled_set(10, 1)
    cfg = toy_config.with_overrides({"epochs": "1"})
    points = data_amount_curve(train, [0.5, 1.0], val, cfg)
    assert [p.fraction for p in points] == [0.5, 1.0]
    assert [p.train_size for p in points] == [15, 30]
    plain = fit(train, val, cfg)
    predicted = np.argmax(plain.model.predict_proba(val.tokens), axis=1)
    assert points[1].accuracy == pytest.approx(float(np.mean(predicted == val.labels)))


def test_one_row_per_fraction(toy_config):
    train, val = random_labeled_set(40, 2), random_labeled_set(10, 3)
    points = data_amount_curve(train, [0.25, 0.5, 1.0], val, toy_config.with_overrides({"epochs": "1"}))
    assert len(points) == 3
    assert [p.train_size for p in points] == [10, 20, 40]


@pytest.mark.slow
def test_more_data_is_not_worse_on_separable_data(toy_config, small_split):
    train, val = (labeled_set(part) for part in small_split)
    points = data_amount_curve(train, [0.1, 1.0], val, toy_config.with_overrides({"epochs": "6"}))
    assert points[1].accuracy >= points[0].accuracy

"""
Emoji and hashtag effects.

Two questions:
- Do tweets with emoji (or hashtags) get classified better than tweets
  without? (group_effect, a straight partition of the evaluation set)
- For one particular emoji, what happens to accuracy on the tweets that
  contain it if we delete it and predict again? (emoji_removal_effect)
"""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Protocol, Sequence

import numpy as np
from logzero import logger

from app.schemas import EMOTIONS, EmojiEffect, GroupEffect
from app.tokenizer import EmojiDatabase, strip_alias, token_texts
from app.utils.dataset import Example, gold_labels

Selector = Literal["has_emoji", "has_hashtag"]


class ProbabilityModel(Protocol):
    def predict_proba(self, batch: Sequence[Sequence[str]]) -> np.ndarray:
        ...


def _rate(correct: int, count: int):
    return correct / count if count else None


def group_effect(examples: Sequence[Example], predicted: Sequence[str], selector: Selector) -> GroupEffect:
    """
    Accuracy inside and outside the group picked by `selector`.

    Raises:
        ValueError: prediction count mismatch or an unknown selector
    """
    if selector not in ("has_emoji", "has_hashtag"):
        raise ValueError(f"unknown selector {selector!r}")
    if len(examples) != len(predicted):
        raise ValueError(f"{len(examples)} examples vs {len(predicted)} predictions")
    gold = gold_labels(examples)
    counts = {True: [0, 0], False: [0, 0]}  # present -> [count, correct]
    for example, g, p in zip(examples, gold, predicted):
        bucket = counts[bool(getattr(example.features, selector))]
        bucket[0] += 1
        bucket[1] += int(g == p)
    return GroupEffect(
        group=selector,
        count_present=counts[True][0],
        accuracy_present=_rate(counts[True][1], counts[True][0]),
        count_absent=counts[False][0],
        accuracy_absent=_rate(counts[False][1], counts[False][0]),
    )


def _predict_labels(model: ProbabilityModel, batch: List[List[str]]) -> List[str]:
    return [EMOTIONS[i] for i in np.argmax(model.predict_proba(batch), axis=1)]


def emoji_removal_effect(model: ProbabilityModel, examples: Sequence[Example], alias: str,
                         db: EmojiDatabase) -> EmojiEffect:
    """
    Accuracy on the tweets containing `alias`, before and after stripping it.

    Args:
        model: Anything with predict_proba(token batches)
        examples: Labeled evaluation examples (unstripped)
        alias: Emoji alias, e.g. "mask"
        db: The table that maps emoji tokens to aliases

    Returns:
        EmojiEffect with delta = (stripped - original) in percentage points

    Raises:
        ValueError: no tweet contains the alias, or a tweet is nothing but that emoji
    """
    chosen = [e for e in examples if alias in e.features.emoji_aliases]
    if not chosen:
        raise ValueError(f"no tweet contains emoji {alias!r}")
    gold = gold_labels(chosen)
    original = [e.words for e in chosen]
    stripped = []
    for e in chosen:
        rest = token_texts(strip_alias(e.tokens, alias, db))
        if not rest:
            raise ValueError(f"example {e.index + 1} has nothing left once {alias!r} is removed")
        stripped.append(rest)

    correct_with = sum(g == p for g, p in zip(gold, _predict_labels(model, original)))
    correct_without = sum(g == p for g, p in zip(gold, _predict_labels(model, stripped)))
    n = len(chosen)
    acc_with, acc_without = correct_with / n, correct_without / n
    return EmojiEffect(
        alias=alias,
        n=n,
        correct_with=correct_with,
        accuracy_with=acc_with,
        correct_without=correct_without,
        accuracy_without=acc_without,
        delta=100.0 * (acc_without - acc_with),
    )


def alias_counts(examples: Sequence[Example]) -> Counter:
    """Number of tweets each alias appears in (not number of occurrences)."""
    return Counter(alias for e in examples for alias in set(e.features.emoji_aliases))


def emoji_effects(model: ProbabilityModel, examples: Sequence[Example], db: EmojiDatabase,
                  min_count: int = 1, jobs: int = 1) -> List[EmojiEffect]:
    """Removal effect for every alias seen in at least `min_count` tweets, alias order."""
    aliases = sorted(a for a, c in alias_counts(examples).items() if c >= min_count)
    logger.info(f"Measuring removal effect for {len(aliases)} emoji (min_count={min_count})")
    if jobs <= 1:
        return [emoji_removal_effect(model, examples, a, db) for a in aliases]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda a: emoji_removal_effect(model, examples, a, db), aliases))

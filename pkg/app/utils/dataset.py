"""
Dataset I/O - `label<TAB>text` files in, tokenized examples out.

The IEST files are one tweet per line. The label column is optional when
reading something to predict on. Bad lines fail loudly with a line number,
because "row 48,113 has a typo'd label" is much nicer to debug than a
KeyError three modules later.
"""

import hashlib
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from app.errors import DataFormatError
from app.schemas import EMOTIONS, RawTweet, TweetFeatures, label_index
from app.tokenizer import Token, TweetTokenizer, strip_emoji, token_texts


class Example(BaseModel):
    """A tweet after preprocessing: tokens, features, and where it came from."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int
    text: str
    label: Optional[str] = None
    tokens: List[Token]
    features: TweetFeatures

    @property
    def words(self) -> List[str]:
        return token_texts(self.tokens)

    @property
    def digest(self) -> str:
        return example_digest(self.text)


class LabeledSet(BaseModel):
    """What the trainer eats: token texts per example plus class indices."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tokens: List[List[str]]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    def subset(self, indices: Sequence[int]) -> "LabeledSet":
        return LabeledSet(
            tokens=[self.tokens[i] for i in indices],
            labels=self.labels[np.asarray(indices, dtype=np.int64)],
        )


def example_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def file_digest(path: str) -> str:
    """sha256 of the file's bytes, hex."""
    h = hashlib.sha256()
    try:
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(1 << 20), b""):
                h.update(chunk)
    except OSError as e:
        raise DataFormatError(f"Cannot read {path}: {e}")
    return h.hexdigest()


def parse_line(line: str, lineno: int, labeled: bool, source: str) -> RawTweet:
    """
    One dataset line -> RawTweet.

    Raises:
        DataFormatError: missing tab, unknown label, or empty text
    """
    if "\t" in line:
        label, text = line.split("\t", 1)
    elif labeled:
        raise DataFormatError(f"{source}:{lineno}: expected 'label<TAB>text'")
    else:
        label, text = None, line
    if label is not None and label not in EMOTIONS:
        if labeled:
            raise DataFormatError(f"{source}:{lineno}: unknown label {label!r}")
        # unlabeled input that happens to contain a tab: keep the whole line
        label, text = None, line
    try:
        return RawTweet(text=text, label=label)
    except ValidationError as e:
        raise DataFormatError(f"{source}:{lineno}: {e.errors()[0]['msg']}")


def read_lines(lines: Iterable[str], labeled: bool = True, source: str = "<memory>") -> List[RawTweet]:
    tweets: List[RawTweet] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        tweets.append(parse_line(line, lineno, labeled, source))
    return tweets


def read_dataset(path: str, labeled: bool = True) -> List[RawTweet]:
    """
    Read a dataset file.

    Args:
        path: UTF-8 file of `label<TAB>text` lines (blank lines skipped)
        labeled: Require the label column

    Raises:
        DataFormatError: unreadable file or a bad line; the message names the line
    """
    try:
        with Path(path).open(encoding="utf-8") as handle:
            tweets = read_lines(handle, labeled=labeled, source=str(path))
    except OSError as e:
        raise DataFormatError(f"Cannot read dataset {path}: {e}")
    except UnicodeDecodeError as e:
        raise DataFormatError(f"{path}: not valid UTF-8 ({e})")
    if not tweets:
        raise DataFormatError(f"{path}: no examples")
    return tweets


def write_dataset(path: str, tweets: Sequence[RawTweet]) -> None:
    lines = [f"{t.label}\t{t.text}\n" if t.label is not None else f"{t.text}\n" for t in tweets]
    Path(path).write_text("".join(lines), encoding="utf-8")


def prepare_examples(tweets: Sequence[RawTweet], tokenizer: TweetTokenizer, strip: bool = False) -> List[Example]:
    """
    Tokenize and featurize. Features always describe the unstripped tweet,
    so the emoji analyses still know which tweets had emoji.

    Raises:
        DataFormatError: a tweet with no tokens left (all emoji, stripped)
    """
    examples: List[Example] = []
    for i, tweet in enumerate(tweets):
        full = tokenizer(tweet.text)
        tokens = strip_emoji(full) if strip else full
        if not tokens:
            raise DataFormatError(f"example {i + 1} has no tokens left after preprocessing: {tweet.text!r}")
        examples.append(
            Example(index=i, text=tweet.text, label=tweet.label, tokens=tokens, features=tokenizer.features(full))
        )
    return examples


def load_examples(path: str, tokenizer: TweetTokenizer, strip: bool = False, labeled: bool = True) -> List[Example]:
    return prepare_examples(read_dataset(path, labeled=labeled), tokenizer, strip=strip)


def labeled_set(examples: Sequence[Example]) -> LabeledSet:
    """
    Raises:
        DataFormatError: an example without a label
    """
    examples = labeled_examples(examples)
    return LabeledSet(
        tokens=[e.words for e in examples],
        labels=np.array([label_index(e.label) for e in examples], dtype=np.int64),
    )


def gold_labels(examples: Sequence[Example]) -> List[str]:
    return [e.label for e in labeled_examples(examples)]


def labeled_examples(examples: Sequence[Example]) -> List[Example]:
    missing = [e.index + 1 for e in examples if e.label is None]
    if missing:
        raise DataFormatError(f"examples without labels: {missing[:5]}")
    return list(examples)


def token_batches(examples: Sequence[Example]) -> List[List[str]]:
    return [e.words for e in examples]


__all__ = [
    "Example",
    "LabeledSet",
    "example_digest",
    "file_digest",
    "gold_labels",
    "labeled_set",
    "load_examples",
    "prepare_examples",
    "read_dataset",
    "read_lines",
    "write_dataset",
    "token_batches",
]

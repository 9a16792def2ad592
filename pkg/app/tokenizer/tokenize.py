"""
Tweet tokenizer - twokenize's idea, taught about emoji.

Two stages:
1. preprocess_substitute swaps the dataset's special markers for
   placeholder tokens (the trigger word, usernames, newlines, URLs).
2. tokenize splits the text with a single longest-match-first grammar:
   placeholders, emoji sequences, hashtags, URL leftovers, words, punctuation.

Everything here is a pure function. No state, no surprises, safe to run
from as many workers as you like.
"""

import re
from enum import Enum
from functools import lru_cache
from typing import Dict, List, NamedTuple, Sequence

from app.schemas import TweetFeatures
from app.tokenizer.emoji_db import EmojiDatabase


class TokenKind(str, Enum):
    WORD = "word"
    EMOJI = "emoji"
    HASHTAG = "hashtag"
    PLACEHOLDER_TRIGGER = "placeholder_trigger"
    PLACEHOLDER_USERNAME = "placeholder_username"
    PLACEHOLDER_NEWLINE = "placeholder_newline"
    PLACEHOLDER_URL = "placeholder_url"
    PUNCTUATION = "punctuation"


class Token(NamedTuple):
    text: str
    kind: TokenKind


# original marker -> replacement, in the order they get applied
SUBSTITUTIONS: Dict[str, str] = {
    "[#TRIGGERWORD#]": "__TRIGGERWORD__",
    "@USERNAME": "__USERNAME__",
    "[NEWLINE]": "__NEWLINE__",
    "http://url.removed": "__URL__",
}

PLACEHOLDER_KINDS: Dict[str, TokenKind] = {
    "__TRIGGERWORD__": TokenKind.PLACEHOLDER_TRIGGER,
    "__USERNAME__": TokenKind.PLACEHOLDER_USERNAME,
    "__NEWLINE__": TokenKind.PLACEHOLDER_NEWLINE,
    "__URL__": TokenKind.PLACEHOLDER_URL,
}

TRIGGER = "__TRIGGERWORD__"

_PLACEHOLDER = "|".join(re.escape(p) for p in PLACEHOLDER_KINDS)

_GROUP_KINDS = {
    "hashtag": TokenKind.HASHTAG,
    "url": TokenKind.WORD,
    "word": TokenKind.WORD,
    "punct": TokenKind.PUNCTUATION,
}


def preprocess_substitute(text: str) -> str:
    """
    Replace the dataset markers with placeholder tokens.

    Idempotent: no replacement contains any of the originals.
    """
    for original, replacement in SUBSTITUTIONS.items():
        text = text.replace(original, replacement)
    return text


def build_grammar(db: EmojiDatabase) -> "re.Pattern[str]":
    """Compile the tokenizer grammar for one emoji database."""
    return _compile(db.pattern)


@lru_cache(maxsize=8)
def _compile(emoji: str) -> "re.Pattern[str]":
    # a word character that starts neither a placeholder ("un__TRIGGERWORD__")
    # nor an emoji ("Top3️⃣" is a word and a keycap)
    word_char = rf"(?:(?!{_PLACEHOLDER})(?!{emoji})\w)"
    hashtag = rf"#{word_char}+"
    return re.compile(
        rf"(?P<placeholder>{_PLACEHOLDER})"
        rf"|(?P<emoji>{emoji})"
        rf"|(?P<hashtag>{hashtag})"
        r"|(?P<url>(?:https?://|www\.)[\w\-./?=&%~+:]+)"
        rf"|(?P<word>{word_char}+(?:['’]{word_char}+)*)"
        rf"|(?P<punct>(?:(?!{emoji})(?!{hashtag})[^\w\s])+)"
    )


def tokenize(text: str, db: EmojiDatabase, lowercase: bool = False) -> List[Token]:
    """
    Split preprocessed text into typed tokens.

    Emoji sequences never get split, adjacent emoji come out as separate
    tokens, and `#word` is one hashtag token. Codepoints the grammar doesn't
    know end up as word or punctuation tokens, never dropped.

    Args:
        text: Output of preprocess_substitute
        db: Emoji table deciding what counts as emoji
        lowercase: Fold words and hashtags to lowercase (placeholders untouched)
    """
    tokens: List[Token] = []
    for match in build_grammar(db).finditer(text):
        group = match.lastgroup
        piece = match.group()
        if group == "placeholder":
            tokens.append(Token(piece, PLACEHOLDER_KINDS[piece]))
        elif group == "emoji":
            tokens.append(Token(piece, TokenKind.EMOJI))
        else:
            kind = _GROUP_KINDS[group]
            if lowercase and kind in (TokenKind.WORD, TokenKind.HASHTAG):
                piece = piece.lower()
            tokens.append(Token(piece, kind))
    return tokens


def strip_emoji(tokens: Sequence[Token]) -> List[Token]:
    """Drop every emoji token, keep the rest in order."""
    return [t for t in tokens if t.kind != TokenKind.EMOJI]


def strip_alias(tokens: Sequence[Token], alias: str, db: EmojiDatabase) -> List[Token]:
    """Drop only the emoji tokens whose alias is `alias`."""
    return [t for t in tokens if not (t.kind == TokenKind.EMOJI and db.alias(t.text) == alias)]


def has_un_trigger(tokens: Sequence[Token]) -> bool:
    for current, following in zip(tokens, tokens[1:]):
        if (
            current.kind == TokenKind.WORD
            and current.text.lower() == "un"
            and following.kind == TokenKind.PLACEHOLDER_TRIGGER
        ):
            return True
    return False


def extract_features(tokens: Sequence[Token], db: EmojiDatabase) -> TweetFeatures:
    """Per-tweet flags the emoji/hashtag/pattern analyses slice on."""
    aliases = [db.alias(t.text) or t.text for t in tokens if t.kind == TokenKind.EMOJI]
    return TweetFeatures(
        has_emoji=bool(aliases),
        has_hashtag=any(t.kind == TokenKind.HASHTAG for t in tokens),
        has_un_trigger=has_un_trigger(tokens),
        emoji_aliases=aliases,
    )


def token_texts(tokens: Sequence[Token]) -> List[str]:
    return [t.text for t in tokens]


class TweetTokenizer:
    """
    Substitution + tokenization + features, bundled.

    Holds the emoji table and the case-folding choice so callers don't have
    to thread them through every call.
    """

    def __init__(self, db: EmojiDatabase, lowercase: bool = False):
        self.db = db
        self.lowercase = lowercase

    def __call__(self, text: str, strip: bool = False) -> List[Token]:
        tokens = tokenize(preprocess_substitute(text), self.db, lowercase=self.lowercase)
        return strip_emoji(tokens) if strip else tokens

    def features(self, tokens: Sequence[Token]) -> TweetFeatures:
        return extract_features(tokens, self.db)

    def render(self, text: str, strip: bool = False) -> str:
        """Tokens joined by single spaces - the `preprocess` output format."""
        return " ".join(token_texts(self(text, strip=strip)))


def render_line(line: str, tokenizer: TweetTokenizer, strip: bool = False, labeled: bool = True) -> str:
    """Turn one dataset line into its tokenized form, label column untouched."""
    if labeled and "\t" in line:
        label, text = line.split("\t", 1)
        return f"{label}\t{tokenizer.render(text, strip=strip)}"
    return tokenizer.render(line, strip=strip)

"""
Tweet preprocessing: marker substitution, emoji-aware tokenization, features.
"""

from .emoji_db import EmojiDatabase, load_emoji_db
from .tokenize import (
    SUBSTITUTIONS,
    TRIGGER,
    Token,
    TokenKind,
    TweetTokenizer,
    extract_features,
    preprocess_substitute,
    strip_alias,
    strip_emoji,
    token_texts,
    tokenize,
)

__all__ = [
    "EmojiDatabase",
    "load_emoji_db",
    "SUBSTITUTIONS",
    "TRIGGER",
    "Token",
    "TokenKind",
    "TweetTokenizer",
    "extract_features",
    "preprocess_substitute",
    "strip_alias",
    "strip_emoji",
    "token_texts",
    "tokenize",
]

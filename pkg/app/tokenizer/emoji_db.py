"""
Emoji database - which codepoint sequences count as emoji, and what they're called.

The table is a pinned snapshot shipped inside the repo (data/emoji.tsv), so
tokenization never depends on whatever emoji package happens to be installed.

The one subtle bit is conflict resolution. Some emoji are built out of
codepoints that also show up as ordinary characters in tweets: the keycap
hash emoji is U+0023 U+FE0F U+20E3, and U+0023 is just `#`. If the bare
`#` stays in the table, every hashtag starts with an "emoji". So single
codepoints below U+00FF get dropped, while the multi-codepoint sequences
that contain them are kept.
"""

import re
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, PrivateAttr

from app.errors import DataFormatError

DEFAULT_DB_PATH = Path(__file__).parent / "data" / "emoji.tsv"

# single codepoints strictly below this are plain-text glyphs, not emoji
GLYPH_CONFLICT_LIMIT = 0xFF


class EmojiDatabase(BaseModel):
    """Emoji sequences mapped to their alias names."""

    entries: Dict[str, str] = Field(default_factory=dict, description="sequence -> alias")
    conflict_resolved: bool = False

    _pattern: Optional[str] = PrivateAttr(default=None)

    def alias(self, sequence: str) -> Optional[str]:
        return self.entries.get(sequence)

    def aliases(self) -> List[str]:
        return sorted(set(self.entries.values()))

    def sequences_for(self, alias: str) -> List[str]:
        return sorted(seq for seq, name in self.entries.items() if name == alias)

    @property
    def pattern(self) -> str:
        """
        Regex alternation over every sequence, longest first.

        Python's alternation is first-match, so ordering by length is what
        makes `❤️` win over `❤` and keeps keycaps in one piece.
        """
        if self._pattern is None:
            ordered = sorted(self.entries, key=lambda s: (-len(s), s))
            self._pattern = "|".join(re.escape(seq) for seq in ordered) or r"(?!x)x"
        return self._pattern


def resolve_conflicts(entries: Dict[str, str]) -> Dict[str, str]:
    """Drop single-codepoint entries that collide with common ASCII/Latin-1 glyphs."""
    return {
        seq: alias
        for seq, alias in entries.items()
        if not (len(seq) == 1 and ord(seq) < GLYPH_CONFLICT_LIMIT)
    }


def parse_emoji_table(lines: List[str], source: str = "<memory>") -> Dict[str, str]:
    """
    Parse `HEX HEX ...<TAB>alias` records. First alias for a sequence wins.

    Raises:
        DataFormatError: a record that isn't hex codepoints plus an alias
    """
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1].strip():
            raise DataFormatError(f"{source}:{lineno}: expected 'codepoints<TAB>alias', got {line!r}")
        try:
            sequence = "".join(chr(int(cp, 16)) for cp in parts[0].split())
        except ValueError as e:
            raise DataFormatError(f"{source}:{lineno}: bad codepoint in {parts[0]!r}: {e}")
        if not sequence:
            raise DataFormatError(f"{source}:{lineno}: empty codepoint sequence")
        entries.setdefault(sequence, parts[1].strip())
    return entries


def load_emoji_db(path: Optional[str] = None, resolve: bool = True) -> EmojiDatabase:
    """
    Load the emoji table from disk.

    Args:
        path: Table to read; the shipped snapshot when None
        resolve: Apply glyph conflict resolution (you want this)
    """
    if path is None:
        return _default_db(resolve)
    return _load(Path(path), resolve)


@lru_cache(maxsize=2)
def _default_db(resolve: bool) -> EmojiDatabase:
    return _load(DEFAULT_DB_PATH, resolve)


def _load(path: Path, resolve: bool) -> EmojiDatabase:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataFormatError(f"Cannot read emoji database {path}: {e}")
    entries = parse_emoji_table(lines, source=str(path))
    if resolve:
        entries = resolve_conflicts(entries)
    return EmojiDatabase(entries=entries, conflict_resolved=resolve)

"""
Synthetic IEST-shaped tweets.

The real shared-task data can't be redistributed, so tests and demos run
on this instead. Each tweet has the raw dataset markers ([#TRIGGERWORD#],
@USERNAME, [NEWLINE], http://url.removed), some filler, and cues:

- a class cue word with probability `signal` (otherwise a cue from a
  random class, possibly the right one)
- a class emoji with probability `emoji_rate`
- a class hashtag with probability `hashtag_rate`

A `trigger_share` of tweets are "un[#TRIGGERWORD#]" pattern tweets with
no cues at all, drawn from the joy examples with probability
`joy_purity` - the same shortcut the real data has.

Labels are assigned round-robin then shuffled, so class counts differ by
at most one.
"""

from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.nn.rng import make_rng
from app.schemas import EMOTIONS, RawTweet

FILLER = (
    "the", "a", "my", "this", "that", "so", "just", "really", "when", "today", "about", "with",
    "people", "morning", "week", "again", "still", "always", "they", "we", "you", "it", "is",
    "was", "feel", "felt", "got", "made", "me", "at", "work", "home", "friends", "night", "why",
    "how", "and", "but", "not", "very", "kind", "of", "being", "after", "before", "everyone",
)

CUE_WORDS: Dict[str, Tuple[str, ...]] = {
    "anger": ("furious", "outraged", "seething", "livid"),
    "disgust": ("gross", "nasty", "revolting", "vile"),
    "fear": ("terrified", "scared", "nightmare", "dread"),
    "joy": ("wonderful", "delighted", "celebrate", "sunshine"),
    "sad": ("lonely", "miss", "tears", "heartbroken"),
    "surprise": ("unexpected", "suddenly", "shocked", "whoa"),
}

CUE_EMOJI: Dict[str, Tuple[str, ...]] = {
    "anger": ("\U0001F621", "\U0001F620"),  # rage, angry
    "disgust": ("\U0001F922", "\U0001F92E"),  # nauseated_face, vomiting_face
    "fear": ("\U0001F631", "\U0001F628"),  # scream, fearful
    "joy": ("\U0001F602", "\U0001F60D"),  # joy, heart_eyes
    "sad": ("\U0001F62D", "\U0001F622"),  # sob, cry
    "surprise": ("\U0001F632", "\U0001F62E"),  # astonished, open_mouth
}

CUE_HASHTAGS: Dict[str, str] = {
    "anger": "#fedup",
    "disgust": "#ew",
    "fear": "#scared",
    "joy": "#blessed",
    "sad": "#sadtimes",
    "surprise": "#plottwist",
}

TRIGGER_MARKER = "[#TRIGGERWORD#]"


class SyntheticSpec(BaseModel):
    """Knobs for generate_synthetic."""

    num: int = Field(..., ge=6)
    seed: int = Field(default=0, ge=0)
    signal: float = Field(default=0.8, ge=0.0, le=1.0)
    emoji_rate: float = Field(default=0.4, ge=0.0, le=1.0)
    hashtag_rate: float = Field(default=0.2, ge=0.0, le=1.0)
    trigger_share: float = Field(default=0.05, ge=0.0, le=1.0)
    joy_purity: float = Field(default=0.99, ge=0.0, le=1.0)
    min_filler: int = Field(default=3, ge=1)
    max_filler: int = Field(default=8, ge=1)


def _pick(rng: np.random.Generator, options) -> str:
    return options[int(rng.integers(len(options)))]


def _pattern_indices(labels: List[str], spec: SyntheticSpec, rng: np.random.Generator) -> set:
    n_pattern = int(round(spec.trigger_share * spec.num))
    joy = [i for i, lab in enumerate(labels) if lab == "joy"]
    other = [i for i, lab in enumerate(labels) if lab != "joy"]
    n_joy = min(len(joy), int(round(n_pattern * spec.joy_purity)))
    n_other = min(len(other), n_pattern - n_joy)
    chosen = list(rng.choice(joy, size=n_joy, replace=False)) if n_joy else []
    chosen += list(rng.choice(other, size=n_other, replace=False)) if n_other else []
    return {int(i) for i in chosen}


def _tweet(label: str, pattern: bool, spec: SyntheticSpec, rng: np.random.Generator) -> str:
    count = int(rng.integers(spec.min_filler, spec.max_filler + 1))
    words = [_pick(rng, FILLER) for _ in range(count)]
    pos = int(rng.integers(0, len(words) + 1))

    if pattern:
        # "un" glued to the marker, like the "unhappy" tweets it stands in for
        words.insert(pos, "un" + TRIGGER_MARKER)
    else:
        words.insert(pos, TRIGGER_MARKER)
        cue_class = label if rng.random() < spec.signal else _pick(rng, EMOTIONS)
        words.insert(int(rng.integers(0, len(words) + 1)), _pick(rng, CUE_WORDS[cue_class]))
        if rng.random() < spec.hashtag_rate:
            words.append(CUE_HASHTAGS[label])
        if rng.random() < spec.emoji_rate:
            words.append(_pick(rng, CUE_EMOJI[label]))

    if rng.random() < 0.3:
        words.insert(0, "@USERNAME")
    if rng.random() < 0.1:
        words.insert(int(rng.integers(1, len(words) + 1)), "[NEWLINE]")
    if rng.random() < 0.1:
        words.append("http://url.removed")
    return " ".join(words)


def generate_synthetic(spec: SyntheticSpec) -> List[RawTweet]:
    """
    Build `spec.num` labeled tweets. Same spec, same tweets.

    Raises:
        ValueError: min_filler > max_filler
    """
    if spec.min_filler > spec.max_filler:
        raise ValueError("min_filler must not exceed max_filler")
    rng = make_rng(spec.seed, "synthetic")
    labels = [EMOTIONS[i % len(EMOTIONS)] for i in range(spec.num)]
    labels = [labels[i] for i in rng.permutation(spec.num)]
    pattern = _pattern_indices(labels, spec, rng)
    return [RawTweet(text=_tweet(label, i in pattern, spec, rng), label=label) for i, label in enumerate(labels)]


def cue_lookup(text: str) -> str:
    """
    The trivial classifier: first class whose cue word appears, else joy.

    At signal 1.0 with no pattern tweets this is always right.
    """
    tokens = text.split()
    for label in EMOTIONS:
        if any(cue in tokens for cue in CUE_WORDS[label]):
            return label
    return "joy"

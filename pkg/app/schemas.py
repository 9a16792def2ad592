"""
Pydantic schemas - because raw dicts are for people who enjoy suffering.

Records that cross a module boundary, land on disk as a report, or go over
the wire live here. If a report says macro F1 is 1.3, Pydantic yells before
anyone quotes it.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Canonical label names, in class-index order
EMOTIONS = ("anger", "disgust", "fear", "joy", "sad", "surprise")
NUM_CLASSES = len(EMOTIONS)

EmotionLabel = Literal["anger", "disgust", "fear", "joy", "sad", "surprise"]


def label_index(label: str) -> int:
    try:
        return EMOTIONS.index(label)
    except ValueError:
        raise ValueError(f"Unknown emotion label {label!r}; expected one of {', '.join(EMOTIONS)}")


# =============================================
# Data records
# =============================================

class RawTweet(BaseModel):
    """One line of a dataset: the text and, when we know it, the emotion."""

    text: str
    label: Optional[EmotionLabel] = None

    @field_validator("text")
    @classmethod
    def text_not_blank(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("tweet text is empty after trimming")
        return v


class TweetFeatures(BaseModel):
    """Flags the analyses slice on. Computed once by the tokenizer."""

    has_emoji: bool = False
    has_hashtag: bool = False
    has_un_trigger: bool = False
    emoji_aliases: List[str] = Field(default_factory=list, description="multiset, in token order")

    @model_validator(mode="after")
    def emoji_flag_matches_aliases(self) -> "TweetFeatures":
        if self.has_emoji != bool(self.emoji_aliases):
            raise ValueError("has_emoji must be true exactly when emoji_aliases is non-empty")
        return self


# =============================================
# Training / ensembling records
# =============================================

class EpochRecord(BaseModel):
    epoch: int = Field(..., ge=1)
    train_loss: float
    val_accuracy: float = Field(..., ge=0.0, le=1.0)


class SubsetResult(BaseModel):
    """One ensemble combination and how it did on the gold labels."""

    bitmask: int = Field(..., ge=1, description="bit i set = member i included")
    size: int = Field(..., ge=1)
    correct: int = Field(..., ge=0)
    accuracy: float = Field(..., ge=0.0, le=1.0)
    members: List[str] = Field(default_factory=list)


# =============================================
# Evaluation / analysis reports
# =============================================

class ClassScores(BaseModel):
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    predicted: int
    true_positives: int


class MetricsReport(BaseModel):
    """
    Confusion matrix plus the usual scores.

    Rows of the confusion matrix are gold labels, columns are predictions.
    Macro scores are unweighted means over classes.
    """

    labels: List[str]
    confusion: List[List[int]]
    per_class: List[ClassScores]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    total: int


class GroupEffect(BaseModel):
    """Accuracy for tweets with and without some feature (emoji, hashtags)."""

    group: str
    count_present: int
    accuracy_present: Optional[float] = None
    count_absent: int
    accuracy_absent: Optional[float] = None


class EmojiEffect(BaseModel):
    """How accuracy moves when one emoji is stripped from the tweets that have it."""

    alias: str
    n: int
    correct_with: int
    accuracy_with: float
    correct_without: int
    accuracy_without: float
    delta: float = Field(..., description="percentage points, stripped minus original")


class CurvePoint(BaseModel):
    fraction: float = Field(..., gt=0.0, le=1.0)
    train_size: int
    accuracy: float
    macro_f1: float


class TriggerReport(BaseModel):
    """What the `un __TRIGGERWORD__` tweets look like and how the model treats them."""

    count: int = 0
    gold_histogram: Dict[str, int] = Field(default_factory=dict)
    accuracy: Optional[float] = None
    predicted_joy_share: Optional[float] = None
    single_cluster: Optional[bool] = None
    cluster_purity: Optional[float] = None
    cluster_coverage: Optional[float] = None


class SweepRow(BaseModel):
    name: str
    overrides: Dict[str, str] = Field(default_factory=dict)
    accuracy: float
    macro_f1: float
    delta: float = Field(..., description="percentage points against the base run")


class RunManifest(BaseModel):
    """Everything needed to tell whether two runs are the same run."""

    tool_version: str
    config: Dict[str, str]
    seeds: List[int]
    dataset_digests: Dict[str, str] = Field(default_factory=dict)
    artifacts: Dict[str, str] = Field(default_factory=dict)
    artifact_digests: Dict[str, str] = Field(default_factory=dict)


# =============================================
# API schemas
# =============================================

class TokenizeRequest(BaseModel):
    text: str = Field(..., min_length=1, max_length=5000)
    strip_emoji: bool = False


class TokenOut(BaseModel):
    text: str
    kind: str


class TokenizeResponse(BaseModel):
    tokens: List[TokenOut]
    features: TweetFeatures


class PredictRequest(BaseModel):
    tweets: List[str] = Field(..., min_length=1, max_length=256)

    @field_validator("tweets")
    @classmethod
    def no_blank_tweets(cls, v: List[str]) -> List[str]:
        if any(not t.strip() for t in v):
            raise ValueError("tweets must not be blank")
        return v

    model_config = {
        "json_schema_extra": {
            "examples": [{"tweets": ["I feel so [#TRIGGERWORD#] today 😭"]}]
        }
    }


class TweetPrediction(BaseModel):
    label: EmotionLabel
    probabilities: Dict[str, float]


class PredictResponse(BaseModel):
    predictions: List[TweetPrediction]


class HealthResponse(BaseModel):
    """Proof that we're still alive. Not much else to say here."""

    model_config = ConfigDict(protected_namespaces=())

    status: str = "ok"
    model_loaded: bool = False


class ErrorResponse(BaseModel):
    error: str
    message: str
    details: List[str] = Field(default_factory=list)

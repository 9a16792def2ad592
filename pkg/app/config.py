"""
Experiment configuration - flat `key = value` files with a strict schema.

One file configures a whole run: model shape, optimizer, preprocessing.
Keys are flat (no sections) because sweep overrides are flat too, and a
typo'd key is an error, not a silently ignored line.

    # toy.conf
    word_dim = 16
    lstm_hidden = 16
    cnn_filter_widths = 1,2,3
    optimizer = adam
"""

from pathlib import Path
from typing import Dict, List, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.errors import ConfigError
from app.schemas import NUM_CLASSES


def _split_list(v):
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


class ModelConfig(BaseModel):
    """
    Architecture knobs. Defaults are desk-scale; the full-size numbers
    (word 1024, hidden 2048, fc 512) are accepted, just slow.
    """

    model_config = ConfigDict(extra="forbid")

    encoder: Literal["char_cnn", "embedding_lookup"] = "char_cnn"
    char_emb_dim: int = Field(default=16, ge=1)
    cnn_filter_widths: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    cnn_filter_counts: List[int] = Field(default_factory=lambda: [16, 16, 32, 32, 32])
    max_word_chars: int = Field(default=64, ge=1)
    word_dim: int = Field(default=64, ge=1)
    lstm_hidden: int = Field(default=128, ge=1, description="per direction")
    pooling: Literal["max", "concat_max_mean_last"] = "max"
    fc_hidden: int = Field(default=64, ge=1)
    num_classes: int = NUM_CLASSES
    dropout_word: float = Field(default=0.5, ge=0.0, lt=1.0)
    dropout_sentence: float = Field(default=0.1, ge=0.0, lt=1.0)
    dropout_fc: float = Field(default=0.5, ge=0.0, lt=1.0)
    forget_bias: float = 1.0
    min_count: int = Field(default=1, ge=1, description="vocabulary cutoff for embedding_lookup")
    vectors_path: Optional[str] = None
    dtype: Literal["float32", "float64"] = "float32"

    @field_validator("cnn_filter_widths", "cnn_filter_counts", mode="before")
    @classmethod
    def comma_lists(cls, v):
        return _split_list(v)

    @field_validator("vectors_path", mode="before")
    @classmethod
    def empty_is_none(cls, v):
        if isinstance(v, str) and v.strip().lower() in ("", "none"):
            return None
        return v

    @model_validator(mode="after")
    def check_shapes(self) -> "ModelConfig":
        if self.num_classes != NUM_CLASSES:
            raise ValueError(f"num_classes must be {NUM_CLASSES}")
        if not self.cnn_filter_widths:
            raise ValueError("cnn_filter_widths must not be empty")
        if len(self.cnn_filter_widths) != len(self.cnn_filter_counts):
            raise ValueError("cnn_filter_widths and cnn_filter_counts must have the same length")
        if any(w < 1 for w in self.cnn_filter_widths) or any(c < 1 for c in self.cnn_filter_counts):
            raise ValueError("filter widths and counts must be positive")
        return self

    @property
    def pooled_dim(self) -> int:
        states = 2 * self.lstm_hidden
        return states if self.pooling == "max" else 3 * states


class TrainConfig(BaseModel):
    """Optimizer, schedule and loop settings."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=64, ge=1)
    optimizer: Literal["adam", "sgd"] = "adam"
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    cut_frac: float = Field(default=0.1, gt=0.0, lt=1.0)
    ratio: float = Field(default=32.0, gt=1.0)
    lr_max: float = Field(default=0.001, gt=0.0)
    sgd_lr: float = Field(default=0.1, ge=0.0)
    seed: int = Field(default=0, ge=0)


class PreprocessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lowercase: bool = False
    strip_emoji: bool = False


class ExperimentConfig(BaseModel):
    """The three sections, addressed through one flat key space."""

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)

    def to_flat(self) -> Dict[str, str]:
        flat: Dict[str, str] = {}
        for section in (self.model, self.train, self.preprocess):
            flat.update(flatten(section))
        return flat

    def with_overrides(self, overrides: Mapping[str, object]) -> "ExperimentConfig":
        """A copy with some flat keys replaced. Unknown keys are a ConfigError."""
        flat: Dict[str, object] = dict(self.to_flat())
        unknown = sorted(set(overrides) - set(flat))
        if unknown:
            raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")
        flat.update({k: as_text(v) for k, v in overrides.items()})
        return config_from_mapping(flat)


_SECTIONS = {
    "model": ModelConfig,
    "train": TrainConfig,
    "preprocess": PreprocessConfig,
}


def as_text(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def flatten(section: BaseModel) -> Dict[str, str]:
    return {name: as_text(getattr(section, name)) for name in type(section).model_fields}


def parse_key_values(text: str, source: str = "<config>") -> Dict[str, str]:
    """
    Parse `key = value` lines. Blank lines and `#` comments are skipped.

    Raises:
        ConfigError: malformed line or a key given twice
    """
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def config_from_mapping(values: Mapping[str, object]) -> ExperimentConfig:
    """
    Route flat keys to their sections and validate.

    Raises:
        ConfigError: unknown keys, or values that fail validation
    """
    known = {name: section for section, cls in _SECTIONS.items() for name in cls.model_fields}
    unknown = sorted(k for k in values if k not in known)
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

    grouped: Dict[str, Dict[str, object]] = {section: {} for section in _SECTIONS}
    for key, value in values.items():
        grouped[known[key]][key] = value

    try:
        return ExperimentConfig(
            **{section: cls.model_validate(grouped[section]) for section, cls in _SECTIONS.items()}
        )
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"Invalid config: {details}")


def load_config(path: Optional[str]) -> ExperimentConfig:
    """Read a config file; None means all defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    return config_from_mapping(parse_key_values(text, source=str(path)))


def render_config(config: ExperimentConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config.to_flat().items())

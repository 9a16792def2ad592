"""
Model registry - one loaded checkpoint, shared by every request.

The API doesn't know or care where the checkpoint came from. It asks the
registry, the registry loads on first use and hands back the same model
(and the tokenizer that matches how it was trained) from then on.

Usage:
    from app.registry import model_registry

    model, tokenizer = model_registry.get()
"""

import threading
from typing import Optional, Tuple

from logzero import logger

from app.errors import UsageError
from app.model.checkpoint import load_experiment_config, load_model
from app.model.classifier import IESTClassifier
from app.settings import get_settings
from app.tokenizer import TweetTokenizer, load_emoji_db


class ModelRegistry:
    """
    Lazily loads the served checkpoint.

    Why a class? So we can:
    - Skip loading until the first /predict
    - Swap the checkpoint in tests
    - Keep the tokenizer and the model in lockstep
    """

    def __init__(self, path: Optional[str] = None):
        self._path = path
        self._model: Optional[IESTClassifier] = None
        self._tokenizer: Optional[TweetTokenizer] = None
        self._strip = False
        self._lock = threading.Lock()

    @property
    def path(self) -> Optional[str]:
        return self._path or get_settings().checkpoint

    @property
    def loaded(self) -> bool:
        return self._model is not None

    @property
    def strip_emoji(self) -> bool:
        return self._strip

    def configure(self, path: Optional[str]) -> None:
        """Point at a different checkpoint. The next get() reloads."""
        with self._lock:
            self._path = path
            self._model = None
            self._tokenizer = None

    def tokenizer(self) -> TweetTokenizer:
        """The checkpoint's tokenizer if one is configured, else the default."""
        if self.path is None:
            if self._tokenizer is None:
                self._tokenizer = TweetTokenizer(load_emoji_db(get_settings().emoji_db))
            return self._tokenizer
        return self.get()[1]

    def get(self) -> Tuple[IESTClassifier, TweetTokenizer]:
        """
        Return the served model and its tokenizer, loading on first call.

        Raises:
            UsageError: no checkpoint configured (set IEST_CHECKPOINT)
            DataFormatError: the checkpoint file is unreadable or corrupt
        """
        with self._lock:
            if self._model is None:
                path = self.path
                if not path:
                    raise UsageError("No checkpoint configured. Set IEST_CHECKPOINT or pass --model to serve.")
                config = load_experiment_config(path)
                self._model = load_model(path)
                self._tokenizer = TweetTokenizer(
                    load_emoji_db(get_settings().emoji_db), lowercase=config.preprocess.lowercase
                )
                self._strip = config.preprocess.strip_emoji
                logger.info(f"Loaded checkpoint {path}")
            return self._model, self._tokenizer


# Global singleton - the API imports this
model_registry = ModelRegistry()

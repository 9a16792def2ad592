"""
Runtime settings - the knobs that live in the environment.

Experiment hyperparameters live in config files (see app.config). This is
for the stuff that depends on the machine: how many workers, how chatty
the logs are, which checkpoint the API should serve.

A `.env` file in the working directory is picked up automatically.
"""

import logging
import os
from typing import Optional

import logzero
from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load .env before anything reads env vars
load_dotenv()


class Settings(BaseModel):
    """Environment-driven settings. Read once, passed around."""

    log_level: str = Field(default="INFO", description="logzero level name")
    jobs: int = Field(default=1, ge=1, description="Default worker pool size")
    emoji_db: Optional[str] = Field(default=None, description="Override path for the emoji database")
    checkpoint: Optional[str] = Field(default=None, description="Checkpoint served by the API")
    progress: bool = Field(default=True, description="Show tqdm progress bars")

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            log_level=os.getenv("IEST_LOG_LEVEL", "INFO"),
            jobs=int(os.getenv("IEST_JOBS", "1")),
            emoji_db=os.getenv("IEST_EMOJI_DB") or None,
            checkpoint=os.getenv("IEST_CHECKPOINT") or None,
            progress=os.getenv("IEST_PROGRESS", "1").lower() not in ("0", "false", "no"),
        )


def setup_logging(level: str = "INFO") -> None:
    """Point logzero at the requested level. Unknown names fall back to INFO."""
    logzero.loglevel(getattr(logging, level.upper(), logging.INFO))


def get_settings() -> Settings:
    return Settings.from_env()

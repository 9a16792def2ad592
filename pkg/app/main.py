"""
IEST Emotion Classifier - API Entry Point

This is where FastAPI wakes up and starts accepting tweets.
Nothing fancy here, just wiring things together.

To run locally:
    IEST_CHECKPOINT=runs/a/models/model_seed0.ckpt uvicorn app.main:app --reload

Or through the CLI:
    python -m app serve --model runs/a/models/model_seed0.ckpt
"""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from logzero import logger

from . import __version__
from .api import router
from .registry import model_registry
from .settings import get_settings, setup_logging

setup_logging(get_settings().log_level)

app = FastAPI(
    title="IEST Emotion Classifier",
    description="Which emotion was hiding behind [#TRIGGERWORD#]? Six guesses, one answer.",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
)

# CORS wide open - this is a research demo, not a bank
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(router)


@app.on_event("startup")
async def startup_event():
    """A friendly log line so we know which checkpoint we'll serve."""
    logger.info(f"IEST classifier up, checkpoint: {model_registry.path or '(none configured)'}")
    logger.info("Docs available at /docs")


@app.on_event("shutdown")
async def shutdown_event():
    logger.info("IEST classifier shutting down.")

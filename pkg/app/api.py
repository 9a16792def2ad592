"""
API Routes - where HTTP meets the classifier.

Endpoints:
- GET  /health     → Are we alive? Is a model loaded?
- POST /tokenize   → Tokens and features for one tweet
- POST /predict    → Emotion label + class probabilities per tweet

Simple is good. Simple doesn't break at 3am.
"""

from typing import List

import numpy as np
from fastapi import APIRouter, HTTPException
from logzero import logger

from .errors import DataFormatError, UsageError
from .registry import model_registry
from .schemas import (
    EMOTIONS,
    ErrorResponse,
    HealthResponse,
    PredictRequest,
    PredictResponse,
    TokenizeRequest,
    TokenizeResponse,
    TokenOut,
    TweetPrediction,
)
from .tokenizer.tokenize import token_texts

router = APIRouter()


def _error(status: int, error: str, message: str, details: List[str] = None) -> HTTPException:
    return HTTPException(status_code=status, detail=ErrorResponse(error=error, message=message, details=details or []).model_dump())


@router.get("/health", response_model=HealthResponse)
def health_check() -> HealthResponse:
    """
    Check if the service is alive.

    "ok" means we're running. model_loaded tells you whether the
    checkpoint has been pulled in yet (it loads on the first /predict).
    """
    return HealthResponse(status="ok", model_loaded=model_registry.loaded)


@router.post(
    "/tokenize",
    response_model=TokenizeResponse,
    responses={500: {"model": ErrorResponse}},
)
def tokenize_tweet(request: TokenizeRequest) -> TokenizeResponse:
    """Run the preprocessing step on one tweet and show what the model would see."""
    try:
        tokenizer = model_registry.tokenizer()
    except (UsageError, DataFormatError) as e:
        raise _error(503, "model_unavailable", str(e))
    tokens = tokenizer(request.text)
    features = tokenizer.features(tokens)
    if request.strip_emoji:
        tokens = tokenizer(request.text, strip=True)
    return TokenizeResponse(tokens=[TokenOut(text=t.text, kind=t.kind.value) for t in tokens], features=features)


@router.post(
    "/predict",
    response_model=PredictResponse,
    responses={
        400: {"model": ErrorResponse, "description": "Nothing left to classify"},
        503: {"model": ErrorResponse, "description": "No checkpoint to serve"},
    },
)
def predict(request: PredictRequest) -> PredictResponse:
    """
    Classify a batch of tweets.

    The tweets go through the same preprocessing the checkpoint was
    trained with, so send them raw ([#TRIGGERWORD#] and all).
    """
    try:
        model, tokenizer = model_registry.get()
    except (UsageError, DataFormatError) as e:
        raise _error(503, "model_unavailable", str(e))

    batch = [token_texts(tokenizer(text, strip=model_registry.strip_emoji)) for text in request.tweets]
    empty = [str(i) for i, tokens in enumerate(batch) if not tokens]
    if empty:
        raise _error(400, "empty_tweet", "Some tweets have no tokens left after preprocessing", [f"index {i}" for i in empty])

    probs = model.predict_proba(batch)
    logger.debug(f"/predict: {len(batch)} tweets")
    return PredictResponse(
        predictions=[
            TweetPrediction(
                label=EMOTIONS[int(np.argmax(row))],
                probabilities={label: float(p) for label, p in zip(EMOTIONS, row)},
            )
            for row in probs
        ]
    )

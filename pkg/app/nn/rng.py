"""
Seeded random streams.

Every source of randomness gets its own stream, derived from (seed, purpose):

    SeedSequence([seed, crc32(purpose)]) -> PCG64

so changing how many dropout masks get drawn can never shift the data
shuffle, and ensemble member k (seed = base + k) shares nothing with
member k+1. Purposes used in the codebase: "init", "shuffle", "dropout",
"subsample", "synthetic", "pca", "kmeans".
"""

import zlib

import numpy as np


def purpose_key(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def make_rng(seed: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (seed, purpose) pair."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([seed, purpose_key(purpose)]))

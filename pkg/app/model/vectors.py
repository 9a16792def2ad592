"""
Text-format word vectors (`word v1 v2 ... vd` per line, GloVe style).

Used to seed the embedding-lookup encoder. We only load vectors here;
training them is somebody else's job.
"""

from pathlib import Path
from typing import Tuple

import numpy as np
from logzero import logger

from app.errors import DataFormatError
from app.model.encoder import Vocabulary


def load_word_vectors(path: str, vocab: Vocabulary, dim: int, table: np.ndarray) -> Tuple[np.ndarray, int]:
    """
    Overwrite rows of `table` for every vocabulary word found in the file.

    A leading `count dim` header line (word2vec text format) is skipped.

    Returns:
        (updated table, number of vocabulary words found)

    Raises:
        DataFormatError: unreadable file or a vector of the wrong length
    """
    table = table.copy()
    found = 0
    try:
        handle = Path(path).open(encoding="utf-8")
    except OSError as e:
        raise DataFormatError(f"Cannot read word vectors {path}: {e}")
    with handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DataFormatError(f"{path}:{lineno}: expected {dim} values for {word!r}, got {len(values)}")
            index = vocab.stoi.get(word)
            if index is None or index < 2:
                continue
            try:
                table[index] = np.asarray(values, dtype=np.float64)
            except ValueError as e:
                raise DataFormatError(f"{path}:{lineno}: {e}")
            found += 1
    logger.info(f"Loaded {found}/{len(vocab) - 2} vocabulary vectors from {path}")
    return table, found

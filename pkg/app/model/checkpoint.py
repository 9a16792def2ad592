"""
Checkpoint container - a small binary format we fully control.

Layout (all integers little-endian):

    b"IESTM1"                     magic
    u16                           format version
    u32 + UTF-8                   metadata blob: `key=value` lines
    repeated until EOF:
        u32 + UTF-8               tensor name
        u8                        rank
        rank x u32                dims
        prod(dims) x float32      data, row-major

Same inputs, same bytes. That's the whole point: two runs with the same
seed must produce files that compare equal with `cmp`.

The same container carries cached probability matrices (one tensor named
`proba`), so the ensemble search never has to run a model again.
"""

import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from app.config import ExperimentConfig, ModelConfig, config_from_mapping
from app.errors import ConfigError, DataFormatError
from app.model.classifier import IESTClassifier
from app.model.encoder import Vocabulary
from app.nn.tensor import Tensor

MAGIC = b"IESTM1"
FORMAT_VERSION = 1

# metadata keys that are not config fields
_RESERVED = ("kind", "vocab")


def _pack_text(text: str) -> bytes:
    data = text.encode("utf-8")
    return struct.pack("<I", len(data)) + data


def encode_meta(meta: Dict[str, str]) -> str:
    for key, value in meta.items():
        if "\n" in key or "=" in key or "\n" in value:
            raise ValueError(f"metadata entry {key!r} cannot be stored as a key=value line")
    return "".join(f"{k}={v}\n" for k, v in meta.items())


def decode_meta(blob: str) -> Dict[str, str]:
    meta: Dict[str, str] = {}
    for line in blob.splitlines():
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DataFormatError(f"bad metadata line {line!r}")
        meta[key] = value
    return meta


def write_container(path: str, meta: Dict[str, str], tensors: Dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<H", FORMAT_VERSION), _pack_text(encode_meta(meta))]
    for name, array in tensors.items():
        array = np.ascontiguousarray(array, dtype="<f4")
        chunks.append(_pack_text(name))
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataFormatError(f"{self.source}: truncated at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (length,) = self.unpack("<I")
        return self.take(length).decode("utf-8")

    @property
    def done(self) -> bool:
        return self.pos >= len(self.data)


def read_container(path: str) -> Tuple[Dict[str, str], Dict[str, np.ndarray]]:
    """
    Raises:
        DataFormatError: wrong magic, unknown version, or truncated file
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataFormatError(f"Cannot read {path}: {e}")
    reader = _Reader(raw, str(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise DataFormatError(f"{path}: not an IESTM1 container")
    (version,) = reader.unpack("<H")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")
    meta = decode_meta(reader.text())
    tensors: Dict[str, np.ndarray] = {}
    while not reader.done:
        name = reader.text()
        (rank,) = reader.unpack("<B")
        dims = reader.unpack(f"<{rank}I") if rank else ()
        count = int(np.prod(dims)) if dims else 1
        data = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(dims)
        tensors[name] = data.astype(np.float32)
    return meta, tensors


def save_model(model: IESTClassifier, path: str, config: Optional[ExperimentConfig] = None) -> None:
    """Write params plus the config (and vocabulary, for the lookup encoder)."""
    config = config if config is not None else ExperimentConfig(model=model.config)
    meta = {"kind": "model", **config.to_flat()}
    if model.vocab is not None:
        # tokens never contain whitespace, so a space-joined list is unambiguous
        meta["vocab"] = " ".join(model.vocab.words())
    write_container(path, meta, {name: p.data for name, p in model.params.items()})


def load_model(path: str) -> IESTClassifier:
    meta, tensors = read_container(path)
    if meta.get("kind") != "model":
        raise DataFormatError(f"{path}: not a model checkpoint (kind={meta.get('kind')!r})")
    vocab_line = meta.get("vocab")
    try:
        config: ModelConfig = config_from_mapping({k: v for k, v in meta.items() if k not in _RESERVED}).model
    except ConfigError as e:
        raise DataFormatError(f"{path}: bad stored config: {e}")
    vocab = Vocabulary(vocab_line.split(" ") if vocab_line else []) if config.encoder == "embedding_lookup" else None
    dtype = np.dtype(config.dtype)
    params = {name: Tensor(array.astype(dtype), requires_grad=True) for name, array in tensors.items()}
    return IESTClassifier(config, params, vocab)


def load_experiment_config(path: str) -> ExperimentConfig:
    meta, _ = read_container(path)
    return config_from_mapping({k: v for k, v in meta.items() if k not in _RESERVED})

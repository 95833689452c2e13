"""
SEKT checkpoint files.

Layout (little-endian):
    magic "SEKT", u32 version, u32 record count
    per record: u16 name length, name (utf-8), u8 dtype code, u8 ndim,
                u32 dims..., row-major payload

Records hold the model state in registry order followed by `meta.config`
(u8 text of the RunConfig), `meta.step` and `meta.num_speakers`.
"""

import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Union

import numpy as np

from ..errors import CheckpointMismatchError, FormatError
from ..models.embedder import SpeakerModel, build_model
from .config import RunConfig, format_config, parse_config

logger = logging.getLogger(__name__)

MAGIC = b"SEKT"
VERSION = 1
DTYPE_CODES = {
    np.dtype("float32"): 0,
    np.dtype("float64"): 1,
    np.dtype("uint8"): 2,
    np.dtype("int64"): 3,
}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}

META_CONFIG = "meta.config"
META_STEP = "meta.step"
META_SPEAKERS = "meta.num_speakers"

PathLike = Union[str, Path]


@dataclass
class CheckpointFile:
    state: "OrderedDict[str, np.ndarray]"
    config: RunConfig
    step: int
    num_speakers: int


def encode_records(records: Dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(records))]
    for name, value in records.items():
        array = np.ascontiguousarray(value)
        if array.dtype not in DTYPE_CODES:
            raise FormatError(f"{name}: unsupported dtype {array.dtype}")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", DTYPE_CODES[array.dtype], array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.astype(array.dtype.newbyteorder("<"), copy=False).tobytes())
    return b"".join(chunks)


def decode_records(raw: bytes, source: str = "<checkpoint>") -> "OrderedDict[str, np.ndarray]":
    if raw[:4] != MAGIC:
        raise FormatError(f"{source}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    try:
        version, count = struct.unpack_from("<II", raw, 4)
        if version != VERSION:
            raise FormatError(f"{source}: unsupported checkpoint version {version}")
        offset = 12
        records: "OrderedDict[str, np.ndarray]" = OrderedDict()
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", raw, offset)
            offset += 2
            name = raw[offset:offset + name_len].decode("utf-8")
            offset += name_len
            code, ndim = struct.unpack_from("<BB", raw, offset)
            offset += 2
            shape = struct.unpack_from(f"<{ndim}I", raw, offset)
            offset += 4 * ndim
            if code not in CODE_DTYPES:
                raise FormatError(f"{source}: record '{name}' has unknown dtype code {code}")
            dtype = CODE_DTYPES[code].newbyteorder("<")
            size = int(np.prod(shape)) * dtype.itemsize
            if offset + size > len(raw):
                raise FormatError(f"{source}: record '{name}' is truncated")
            records[name] = np.frombuffer(raw, dtype=dtype, count=int(np.prod(shape)), offset=offset).reshape(shape).copy()
            offset += size
    except struct.error as exc:
        raise FormatError(f"{source}: truncated checkpoint ({exc})") from exc
    if offset != len(raw):
        raise FormatError(f"{source}: {len(raw) - offset} trailing bytes")
    return records


def save_checkpoint(path: PathLike, model: SpeakerModel, config: RunConfig, step: int) -> Path:
    """Write parameters, buffers, the config text and the step counter."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = model.state_dict()
    records[META_CONFIG] = np.frombuffer(format_config(config).encode("utf-8"), dtype=np.uint8)
    records[META_STEP] = np.array(step, dtype=np.int64)
    records[META_SPEAKERS] = np.array(model.classifier.num_classes, dtype=np.int64)
    path.write_bytes(encode_records(records))
    logger.info("Saved checkpoint at step %d to %s", step, path)
    return path


def write_checkpoint_file(path: PathLike, ckpt: CheckpointFile) -> Path:
    """Re-serialise a loaded checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = OrderedDict(ckpt.state)
    records[META_CONFIG] = np.frombuffer(format_config(ckpt.config).encode("utf-8"), dtype=np.uint8)
    records[META_STEP] = np.array(ckpt.step, dtype=np.int64)
    records[META_SPEAKERS] = np.array(ckpt.num_speakers, dtype=np.int64)
    path.write_bytes(encode_records(records))
    return path


def load_checkpoint(path: PathLike) -> CheckpointFile:
    path = Path(path)
    records = decode_records(path.read_bytes(), source=str(path))
    for key in (META_CONFIG, META_STEP, META_SPEAKERS):
        if key not in records:
            raise FormatError(f"{path}: missing record '{key}'")
    config = parse_config(records.pop(META_CONFIG).tobytes().decode("utf-8"), source=f"{path}:{META_CONFIG}")
    step = int(records.pop(META_STEP))
    speakers = int(records.pop(META_SPEAKERS))
    return CheckpointFile(state=records, config=config, step=step, num_speakers=speakers)


def restore_model(ckpt: CheckpointFile) -> SpeakerModel:
    """
    Rebuild the model from the stored config and load its state.

    Raises:
        CheckpointMismatchError: if the state does not match the rebuilt registry
    """
    model = build_model(ckpt.config, ckpt.num_speakers)
    try:
        model.load_state_dict(ckpt.state)
    except CheckpointMismatchError:
        logger.error("Checkpoint state does not match a %s model built from its own config", ckpt.config.model)
        raise
    return model

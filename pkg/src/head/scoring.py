"""
Cosine scoring and the utterance-id -> embedding store.

Store formats:
    text  one line per utterance: `utt_id v1 v2 ... vD`
    SEKE  magic "SEKE", u32 dim, f32 data (one embedding per file)
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, Iterator, Tuple, Union

import numpy as np

from ..errors import FormatError, MissingIdError, ShapeMismatchError

logger = logging.getLogger(__name__)

SEKE_MAGIC = b"SEKE"
SEKE_HEADER = struct.Struct("<4sI")

PathLike = Union[str, Path]


def cosine_score(a: np.ndarray, b: np.ndarray) -> float:
    """a.b / (|a| |b|); a zero vector scores 0."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot score embeddings of dims {a.size} and {b.size}")
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / norm, -1.0, 1.0))


def write_seke(path: PathLike, embedding: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(embedding, dtype="<f4").reshape(-1)
    with open(path, "wb") as f:
        f.write(SEKE_HEADER.pack(SEKE_MAGIC, data.size))
        f.write(data.tobytes())
    return path


def read_seke(path: PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < SEKE_HEADER.size:
        raise FormatError(f"{path}: truncated SEKE header")
    magic, dim = SEKE_HEADER.unpack_from(raw)
    if magic != SEKE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {SEKE_MAGIC!r}")
    if len(raw) != SEKE_HEADER.size + 4 * dim:
        raise FormatError(f"{path}: expected {dim} floats, got {(len(raw) - SEKE_HEADER.size) // 4}")
    return np.frombuffer(raw, dtype="<f4", offset=SEKE_HEADER.size).astype(np.float32)


class EmbeddingStore:
    """Ordered mapping from utterance id to a fixed-dimension embedding."""

    def __init__(self, items: Iterable[Tuple[str, np.ndarray]] = ()):
        self._vectors: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self.dim = None
        for utt_id, vector in items:
            self.add(utt_id, vector)

    def add(self, utt_id: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float32).reshape(-1)
        if not np.all(np.isfinite(vector)):
            raise FormatError(f"embedding for '{utt_id}' has non-finite values")
        if self.dim is None:
            self.dim = vector.size
        elif vector.size != self.dim:
            raise ShapeMismatchError(f"embedding for '{utt_id}' has dim {vector.size}, store holds {self.dim}")
        self._vectors[utt_id] = vector

    def __getitem__(self, utt_id: str) -> np.ndarray:
        try:
            return self._vectors[utt_id]
        except KeyError:
            raise MissingIdError(f"utterance id '{utt_id}' not found in embedding store") from None

    def __contains__(self, utt_id: str) -> bool:
        return utt_id in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def __iter__(self) -> Iterator[str]:
        return iter(self._vectors)

    def items(self):
        return self._vectors.items()

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self._vectors)

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------
    def save_text(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for utt_id, vector in self._vectors.items():
                f.write(utt_id + " " + " ".join(repr(float(v)) for v in vector) + "\n")
        logger.info("Wrote %d embeddings to %s", len(self), path)
        return path

    @classmethod
    def load_text(cls, path: PathLike) -> "EmbeddingStore":
        store = cls()
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                fields = line.split()
                if not fields:
                    continue
                if len(fields) < 2:
                    raise FormatError(f"{path}:{lineno}: expected 'utt_id v1 ... vD'")
                try:
                    vector = np.array([float(v) for v in fields[1:]], dtype=np.float32)
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc
                store.add(fields[0], vector)
        return store

    def save_seke_dir(self, directory: PathLike) -> Path:
        """One `<utt_id>.seke` file per embedding."""
        directory = Path(directory)
        for utt_id, vector in self._vectors.items():
            write_seke(directory / f"{utt_id}.seke", vector)
        return directory

    @classmethod
    def load_seke_dir(cls, directory: PathLike) -> "EmbeddingStore":
        return cls((p.stem, read_seke(p)) for p in sorted(Path(directory).glob("*.seke")))

    @classmethod
    def load(cls, path: PathLike) -> "EmbeddingStore":
        """Text file or SEKE directory."""
        path = Path(path)
        return cls.load_seke_dir(path) if path.is_dir() else cls.load_text(path)

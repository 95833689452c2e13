"""
Readers and writers for waveforms and feature matrices.

Formats:
    WAV   mono 16-bit little-endian PCM (scipy.io.wavfile)
    SEKW  magic "SEKW", u32 sample_rate, u64 n_samples, f32 samples
    SEKF  magic "SEKF", u32 T, u32 F, f32 row-major frames
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
from scipy.io import wavfile

from ..errors import FormatError
from .features import LogMelFeatures, Waveform

logger = logging.getLogger(__name__)

SEKW_MAGIC = b"SEKW"
SEKF_MAGIC = b"SEKF"
SEKW_HEADER = struct.Struct("<4sIQ")
SEKF_HEADER = struct.Struct("<4sII")

PathLike = Union[str, Path]


def read_wav(path: PathLike) -> Waveform:
    """
    Read a mono 16-bit PCM WAV file.

    Args:
        path: File to read

    Returns:
        Waveform with samples scaled to [-1, 1)
    """
    sample_rate, data = wavfile.read(str(path))
    if data.dtype != np.int16:
        raise FormatError(f"{path}: expected 16-bit PCM, got {data.dtype}")
    if data.ndim != 1:
        raise FormatError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    return Waveform(samples=data.astype(np.float64) / 32768.0, sample_rate=int(sample_rate))


def write_wav(path: PathLike, waveform: Waveform) -> Path:
    """Write a waveform as mono 16-bit PCM, clipping to the representable range."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(waveform.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(str(path), waveform.sample_rate, pcm)
    return path


def write_sekw(path: PathLike, waveform: Waveform) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples = np.asarray(waveform.samples, dtype="<f4")
    with open(path, "wb") as f:
        f.write(SEKW_HEADER.pack(SEKW_MAGIC, waveform.sample_rate, samples.size))
        f.write(samples.tobytes())
    return path


def read_sekw(path: PathLike) -> Waveform:
    raw = Path(path).read_bytes()
    if len(raw) < SEKW_HEADER.size:
        raise FormatError(f"{path}: truncated SEKW header")
    magic, sample_rate, count = SEKW_HEADER.unpack_from(raw)
    if magic != SEKW_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {SEKW_MAGIC!r}")
    expected = SEKW_HEADER.size + 4 * count
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {count} samples, got {len(raw)}")
    samples = np.frombuffer(raw, dtype="<f4", count=count, offset=SEKW_HEADER.size)
    return Waveform(samples=samples.astype(np.float64), sample_rate=sample_rate)


def load_waveform(path: PathLike) -> Waveform:
    """Dispatch on file extension (.wav or .sekw)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".wav":
        return read_wav(path)
    if suffix == ".sekw":
        return read_sekw(path)
    raise FormatError(f"{path}: unsupported waveform extension '{suffix}'")


def write_sekf(path: PathLike, features: LogMelFeatures) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = np.asarray(features.frames, dtype="<f4")
    with open(path, "wb") as f:
        f.write(SEKF_HEADER.pack(SEKF_MAGIC, frames.shape[0], frames.shape[1]))
        f.write(frames.tobytes())
    return path


def read_sekf(path: PathLike) -> LogMelFeatures:
    raw = Path(path).read_bytes()
    if len(raw) < SEKF_HEADER.size:
        raise FormatError(f"{path}: truncated SEKF header")
    magic, num_frames, num_bins = SEKF_HEADER.unpack_from(raw)
    if magic != SEKF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {SEKF_MAGIC!r}")
    expected = SEKF_HEADER.size + 4 * num_frames * num_bins
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {num_frames}x{num_bins}, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=SEKF_HEADER.size).reshape(num_frames, num_bins)
    return LogMelFeatures(frames=data.astype(np.float64))

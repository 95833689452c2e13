"""
Log-Mel filterbank features and fixed-length segment cropping.

Each 25 ms frame (10 ms hop at 16 kHz) is pre-emphasised, Hann-windowed and
transformed to a magnitude spectrum, pooled by 80 HTK-scale triangular Mel
filters and log-compressed with a floor. Utterance-level mean subtraction
per coefficient completes the pipeline.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft, signal

from ..errors import FormatError, ShapeMismatchError

logger = logging.getLogger(__name__)

SAMPLE_RATE = 16000
WINDOW_LENGTH = 400  # 25 ms
HOP_LENGTH = 160  # 10 ms
N_FFT = 512
N_MELS = 80
PREEMPHASIS = 0.97
LOG_FLOOR = 1e-10


@dataclass
class Waveform:
    """Mono audio samples with their sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise FormatError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size == 0:
            raise FormatError("waveform has no samples")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass
class LogMelFeatures:
    """T x F matrix of log-Mel energies (F = 80)."""

    frames: np.ndarray
    frame_period_ms: float = 10.0
    window_length_ms: float = 25.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ShapeMismatchError(f"features must be T x F, got shape {self.frames.shape}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_bins(self) -> int:
        return self.frames.shape[1]


def hz_to_mel(freq):
    """HTK Mel scale: 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(freq, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_center_frequencies(n_mels: int = N_MELS, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Center frequencies (Hz) of the triangular filters, lowest first."""
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    return edges[1:-1]


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """
    Triangular Mel filters over the rfft bins.

    Args:
        n_mels: Number of filters
        n_fft: FFT size
        sample_rate: Sample rate in Hz

    Returns:
        (n_mels, n_fft // 2 + 1) weight matrix
    """
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    bins = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bins[None, :] - lower) / (center - lower)
    falling = (upper - bins[None, :]) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def frame_count(num_samples: int, window: int = WINDOW_LENGTH, hop: int = HOP_LENGTH) -> int:
    return 1 + (num_samples - window) // hop


def log_mel_energies(waveform: Waveform, n_mels: int = N_MELS) -> np.ndarray:
    """
    Log-Mel energies before mean normalisation.

    Args:
        waveform: Input audio (at least one window long)
        n_mels: Number of Mel filters

    Returns:
        (T, n_mels) array with T = 1 + (len - window) // hop
    """
    samples = waveform.samples
    if samples.size < WINDOW_LENGTH:
        raise ShapeMismatchError(
            f"waveform has {samples.size} samples, shorter than one {WINDOW_LENGTH}-sample window"
        )
    frames = sliding_window_view(samples, WINDOW_LENGTH)[::HOP_LENGTH]
    emphasized = np.empty_like(frames)
    emphasized[:, 1:] = frames[:, 1:] - PREEMPHASIS * frames[:, :-1]
    emphasized[:, 0] = frames[:, 0] * (1.0 - PREEMPHASIS)

    window = signal.get_window("hann", WINDOW_LENGTH)
    magnitude = np.abs(fft.rfft(emphasized * window, n=N_FFT, axis=1))
    energies = magnitude @ mel_filterbank(n_mels, N_FFT, waveform.sample_rate).T
    return np.log(np.maximum(energies, LOG_FLOOR))


def normalize_utterance(frames: np.ndarray) -> np.ndarray:
    """
    Subtract the per-coefficient utterance mean.

    The mean is taken relative to the first frame so constant coefficients
    normalise to exactly zero.
    """
    frames = np.asarray(frames, dtype=np.float64)
    anchor = frames[:1]
    return frames - (anchor + np.mean(frames - anchor, axis=0, keepdims=True))


def log_mel_features(waveform: Waveform, n_mels: int = N_MELS) -> LogMelFeatures:
    """Utterance-mean-normalised log-Mel features."""
    return LogMelFeatures(frames=normalize_utterance(log_mel_energies(waveform, n_mels)))


def crop_segment(features: LogMelFeatures, frames: int, rng: np.random.Generator) -> LogMelFeatures:
    """
    Random contiguous crop of exactly `frames` rows.

    Utterances shorter than `frames` are tiled along time first.

    Args:
        features: Source features
        frames: Segment length (> 0)
        rng: Random generator choosing the start frame

    Returns:
        Cropped features
    """
    if frames <= 0:
        raise ShapeMismatchError(f"segment length must be positive, got {frames}")
    source = features.frames
    if source.shape[0] < frames:
        repeats = -(-frames // source.shape[0])
        source = np.tile(source, (repeats, 1))
    start = int(rng.integers(0, source.shape[0] - frames + 1))
    return LogMelFeatures(frames=source[start:start + frames].copy())


def fit_to_multiple(features: LogMelFeatures, multiple: int, minimum: Optional[int] = None) -> LogMelFeatures:
    """
    Deterministic evaluation crop: keep the longest prefix whose length is a
    multiple of `multiple` (tiling first if the utterance is shorter than
    `minimum`, which defaults to `multiple`).
    """
    minimum = minimum or multiple
    source = features.frames
    if source.shape[0] < minimum:
        repeats = -(-minimum // source.shape[0])
        source = np.tile(source, (repeats, 1))
    usable = (source.shape[0] // multiple) * multiple
    return LogMelFeatures(frames=source[:usable].copy())


def main():
    """Extract features from a synthetic tone and report their shape."""
    t = np.arange(2 * SAMPLE_RATE) / SAMPLE_RATE
    waveform = Waveform(samples=0.3 * np.sin(2 * np.pi * 1000.0 * t))
    feats = log_mel_features(waveform)
    print(f"2.0 s tone -> {feats.num_frames} x {feats.num_bins} features")
    segment = crop_segment(feats, 200, np.random.default_rng(0))
    print(f"Cropped segment: {segment.num_frames} frames")
    peak = int(np.argmax(log_mel_energies(waveform).mean(axis=0)))
    print(f"Peak Mel bin: {peak} (center {mel_center_frequencies()[peak]:.1f} Hz)")


if __name__ == "__main__":
    main()

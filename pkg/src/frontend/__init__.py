"""Audio frontend: waveform IO, log-Mel features and segment cropping."""

from .features import (
    LogMelFeatures,
    Waveform,
    crop_segment,
    fit_to_multiple,
    log_mel_energies,
    log_mel_features,
    mel_center_frequencies,
    mel_filterbank,
    normalize_utterance,
)
from .audio_io import load_waveform, read_sekf, read_sekw, read_wav, write_sekf, write_sekw, write_wav

__all__ = [
    "LogMelFeatures",
    "Waveform",
    "crop_segment",
    "fit_to_multiple",
    "log_mel_energies",
    "log_mel_features",
    "mel_center_frequencies",
    "mel_filterbank",
    "normalize_utterance",
    "load_waveform",
    "read_sekf",
    "read_sekw",
    "read_wav",
    "write_sekf",
    "write_sekw",
    "write_wav",
]

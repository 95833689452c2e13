import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import FormatError, ShapeMismatchError
from src.frontend import (
    LogMelFeatures,
    Waveform,
    crop_segment,
    fit_to_multiple,
    load_waveform,
    log_mel_energies,
    log_mel_features,
    mel_center_frequencies,
    mel_filterbank,
    read_sekf,
    read_sekw,
    write_sekf,
    write_sekw,
    write_wav,
)
from src.frontend.features import SAMPLE_RATE, frame_count


def tone(freq=1000.0, seconds=2.0, amplitude=0.3):
    t = np.arange(int(seconds * SAMPLE_RATE)) / SAMPLE_RATE
    return Waveform(samples=amplitude * np.sin(2 * np.pi * freq * t))


def test_two_seconds_give_198_frames_of_80_bins():
    feats = log_mel_features(tone())
    assert feats.frames.shape == (198, 80)
    assert frame_count(2 * SAMPLE_RATE) == 198


def test_sine_energy_peaks_at_the_nearest_mel_filter():
    peak = int(np.argmax(log_mel_energies(tone()).mean(axis=0)))
    nearest = int(np.argmin(np.abs(mel_center_frequencies() - 1000.0)))
    assert abs(peak - nearest) <= 1


def test_filterbank_rows_are_triangles_peaking_at_one():
    bank = mel_filterbank()
    assert bank.shape == (80, 257)
    assert np.all(bank >= 0.0)
    assert np.all(bank.max(axis=1) <= 1.0)


def test_normalised_features_have_zero_mean_per_bin():
    feats = log_mel_features(tone(seconds=1.0))
    np.testing.assert_allclose(feats.frames.mean(axis=0), 0.0, atol=1e-9)


def test_constant_signal_normalises_to_exact_zero():
    feats = log_mel_features(Waveform(samples=np.zeros(SAMPLE_RATE)))
    assert np.all(feats.frames == 0.0)


def test_waveform_shorter_than_a_window_is_rejected():
    with pytest.raises(ShapeMismatchError):
        log_mel_energies(Waveform(samples=np.zeros(399)))


def test_empty_waveform_is_rejected():
    with pytest.raises(FormatError):
        Waveform(samples=np.zeros(0))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=60), st.integers(min_value=1, max_value=90), st.integers(0, 2**16))
def test_crop_always_returns_requested_length(num_frames, length, seed):
    feats = LogMelFeatures(frames=np.arange(num_frames * 3, dtype=np.float64).reshape(num_frames, 3))
    segment = crop_segment(feats, length, np.random.default_rng(seed))
    assert segment.frames.shape == (length, 3)


def test_crop_of_long_utterance_is_a_contiguous_slice(rng):
    frames = np.arange(50, dtype=np.float64).reshape(50, 1)
    segment = crop_segment(LogMelFeatures(frames=frames), 10, rng).frames[:, 0]
    np.testing.assert_array_equal(np.diff(segment), 1.0)


def test_crop_rejects_non_positive_length(rng):
    with pytest.raises(ShapeMismatchError):
        crop_segment(LogMelFeatures(frames=np.zeros((5, 2))), 0, rng)


def test_fit_to_multiple_keeps_longest_prefix():
    feats = LogMelFeatures(frames=np.arange(23, dtype=np.float64).reshape(23, 1))
    fitted = fit_to_multiple(feats, 4)
    assert fitted.num_frames == 20
    np.testing.assert_array_equal(fitted.frames[:, 0], np.arange(20))


def test_fit_to_multiple_tiles_short_utterances():
    feats = LogMelFeatures(frames=np.arange(3, dtype=np.float64).reshape(3, 1))
    fitted = fit_to_multiple(feats, 4, minimum=8)
    assert fitted.num_frames == 8
    np.testing.assert_array_equal(fitted.frames[:, 0], [0, 1, 2, 0, 1, 2, 0, 1])


def test_sekw_file_reads_back_as_float32_samples(tmp_path):
    original = tone(seconds=0.1)
    path = write_sekw(tmp_path / "a.sekw", original)
    loaded = read_sekw(path)
    assert loaded.sample_rate == SAMPLE_RATE
    np.testing.assert_array_equal(loaded.samples, original.samples.astype(np.float32))


def test_sekf_file_reads_back_as_float32_frames(tmp_path, rng):
    feats = LogMelFeatures(frames=rng.standard_normal((7, 80)))
    loaded = read_sekf(write_sekf(tmp_path / "a.sekf", feats))
    np.testing.assert_array_equal(loaded.frames, feats.frames.astype(np.float32))


def test_wav_is_quantised_to_16_bit(tmp_path):
    original = tone(seconds=0.1)
    loaded = load_waveform(write_wav(tmp_path / "a.wav", original))
    np.testing.assert_allclose(loaded.samples, original.samples, atol=1.0 / 32768.0)


def test_bad_magic_is_a_format_error(tmp_path):
    path = tmp_path / "bad.sekf"
    path.write_bytes(b"XXXX" + b"\x00" * 8)
    with pytest.raises(FormatError, match="bad magic"):
        read_sekf(path)


def test_truncated_payload_is_a_format_error(tmp_path, rng):
    path = write_sekf(tmp_path / "a.sekf", LogMelFeatures(frames=rng.standard_normal((4, 5))))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FormatError):
        read_sekf(path)


def test_stereo_wav_is_rejected(tmp_path):
    from scipy.io import wavfile

    path = tmp_path / "stereo.wav"
    wavfile.write(str(path), SAMPLE_RATE, np.zeros((800, 2), dtype=np.int16))
    with pytest.raises(FormatError, match="mono"):
        load_waveform(path)


def test_unknown_extension_is_rejected(tmp_path):
    with pytest.raises(FormatError):
        load_waveform(tmp_path / "clip.flac")

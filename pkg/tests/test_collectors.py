import numpy as np
import pandas as pd
import pytest

from src.collectors.corpus_importer import CorpusImporter
from src.collectors.synth_generator import (
    SyntheticCorpusGenerator,
    speaker_spec,
    synthesize_utterance,
    utterance_profile,
)
from src.errors import ConfigValidationError, FormatError
from src.frontend import read_sekw


def test_corpus_has_every_speaker_and_utterance(synth_corpus):
    root, manifest = synth_corpus
    assert len(manifest) == 12
    assert manifest["speaker_id"].value_counts().tolist() == [3, 3, 3, 3]
    assert manifest["utt_id"].iloc[0] == "spk000-utt000"
    assert all(path.startswith(str(root.resolve())) for path in manifest["path"])


def test_generation_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        SyntheticCorpusGenerator(tmp_path / name, audio_format="sekw", seed=7).generate(2, 2)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert len(files) == 5
    for relative in files:
        assert (tmp_path / "a" / relative).read_bytes() == (tmp_path / "b" / relative).read_bytes()


def test_seed_changes_the_voices():
    assert speaker_spec(0, seed=0).formants != speaker_spec(0, seed=1).formants


def test_sekw_audio_round_trips_the_waveform(tmp_path):
    SyntheticCorpusGenerator(tmp_path, audio_format="sekw", seed=3).generate(2, 1)
    stored = read_sekw(tmp_path / "audio" / "spk001" / "spk001-utt000.sekw")
    expected = synthesize_utterance(speaker_spec(1, seed=3), 0)
    np.testing.assert_array_equal(stored.samples, expected.samples.astype(np.float32))


def test_utterance_length_and_amplitude():
    wave = synthesize_utterance(speaker_spec(2), 4)
    assert 2.0 * wave.sample_rate <= len(wave.samples) <= 3.0 * wave.sample_rate
    assert np.max(np.abs(wave.samples)) < 1.0


def test_profiles_cluster_by_speaker():
    profiles = {
        (spk, utt): utterance_profile(synthesize_utterance(speaker_spec(spk), utt)) for spk in range(3) for utt in range(3)
    }
    within, across = [], []
    keys = sorted(profiles)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            distance = np.linalg.norm(profiles[a] - profiles[b])
            (within if a[0] == b[0] else across).append(distance)
    assert np.mean(within) < np.mean(across)


@pytest.mark.parametrize("kwargs", [dict(n_speakers=1, utts_per_speaker=2), dict(n_speakers=2, utts_per_speaker=0)])
def test_generator_rejects_degenerate_corpora(tmp_path, kwargs):
    with pytest.raises(ConfigValidationError):
        SyntheticCorpusGenerator(tmp_path).generate(**kwargs)


def test_generator_rejects_unknown_format(tmp_path):
    with pytest.raises(ConfigValidationError):
        SyntheticCorpusGenerator(tmp_path, audio_format="flac")


def test_manifest_rejects_duplicate_ids(tmp_path):
    path = tmp_path / "manifest.txt"
    path.write_text("u1 s1 a.wav\nu1 s2 b.wav\n")
    with pytest.raises(FormatError, match="duplicate utterance id 'u1'"):
        CorpusImporter().read_manifest(path)


def test_manifest_needs_three_columns(tmp_path):
    path = tmp_path / "manifest.txt"
    path.write_text("u1 s1\n")
    with pytest.raises(FormatError, match="expected 3 columns"):
        CorpusImporter().read_manifest(path)


def test_missing_file_is_a_format_error(tmp_path):
    with pytest.raises(FormatError, match="file not found"):
        CorpusImporter().read_trials(tmp_path / "trials.txt")


def test_trial_labels_must_be_binary(tmp_path):
    path = tmp_path / "trials.txt"
    path.write_text("1 a b\n2 a c\n")
    with pytest.raises(FormatError, match="got '2'"):
        CorpusImporter().read_trials(path)


def test_scores_must_be_numeric_and_finite(tmp_path):
    importer = CorpusImporter()
    path = tmp_path / "scores.txt"
    path.write_text("a b high\n")
    with pytest.raises(FormatError, match="non-numeric"):
        importer.read_scores(path)
    path.write_text("a b nan\n")
    with pytest.raises(FormatError, match="finite"):
        importer.read_scores(path)


def test_scores_keep_full_precision(tmp_path):
    importer = CorpusImporter()
    scores = pd.DataFrame({"enroll_id": ["a"], "test_id": ["b"], "score": [0.1 + 0.2]})
    back = importer.read_scores(importer.write_scores(scores, tmp_path / "scores.txt"))
    assert back["score"].iloc[0] == 0.1 + 0.2


def test_split_holds_out_the_last_utterances(synth_corpus):
    _, manifest = synth_corpus
    train, heldout = CorpusImporter.split_manifest(manifest, holdout_per_speaker=1)
    assert len(train) == 8 and len(heldout) == 4
    assert set(heldout["utt_id"].str[-3:]) == {"002"}
    assert not set(train["utt_id"]) & set(heldout["utt_id"])


def test_trials_are_balanced_and_well_formed(synth_corpus):
    _, manifest = synth_corpus
    trials = CorpusImporter.make_trials(manifest, 40, seed=1)
    speaker = dict(zip(manifest["utt_id"], manifest["speaker_id"]))
    assert (trials["label"] == 1).sum() == 20
    same = trials["enroll_id"].map(speaker) == trials["test_id"].map(speaker)
    assert (same == (trials["label"] == 1)).all()
    assert (trials["enroll_id"] != trials["test_id"]).all()
    pd.testing.assert_frame_equal(trials, CorpusImporter.make_trials(manifest, 40, seed=1))


def test_trials_need_a_repeated_speaker():
    manifest = pd.DataFrame({"utt_id": ["a", "b"], "speaker_id": ["s1", "s2"], "path": ["a", "b"]})
    with pytest.raises(FormatError):
        CorpusImporter.make_trials(manifest, 4)


def test_speaker_labels_follow_sorted_ids(synth_corpus):
    _, manifest = synth_corpus
    assert CorpusImporter.speaker_labels(manifest) == {"spk000": 0, "spk001": 1, "spk002": 2, "spk003": 3}


def test_features_come_from_audio_and_sekf(synth_corpus, corpus_features, tmp_path):
    from src.frontend import write_sekf

    _, manifest = synth_corpus
    first = manifest["utt_id"].iloc[0]
    write_sekf(tmp_path / "f.sekf", corpus_features[first])
    cached = pd.DataFrame({"utt_id": [first], "speaker_id": ["spk000"], "path": [str(tmp_path / "f.sekf")]})
    loaded = CorpusImporter.load_features(cached)[first]
    np.testing.assert_allclose(loaded.frames, corpus_features[first].frames, rtol=0, atol=1e-6)
    assert corpus_features[first].frames.shape[1] == 80

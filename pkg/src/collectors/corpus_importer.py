"""
Importer for corpus manifests, trial lists and score files.

Formats (whitespace separated, one record per line):
    manifest  utt_id speaker_id path     (paths relative to the manifest's directory)
    trials    label enroll_id test_id    (label 1 = target, 0 = nontarget)
    scores    enroll_id test_id score
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import FormatError
from ..frontend import LogMelFeatures, load_waveform, log_mel_features, read_sekf

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST_COLUMNS = ["utt_id", "speaker_id", "path"]
TRIAL_COLUMNS = ["label", "enroll_id", "test_id"]
SCORE_COLUMNS = ["enroll_id", "test_id", "score"]


def _read_table(path: PathLike, columns: List[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: file not found")
    try:
        df = pd.read_csv(path, sep=r"\s+", header=None, dtype=str, comment="#", engine="python")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)
    if df.shape[1] != len(columns):
        raise FormatError(f"{path}: expected {len(columns)} columns ({' '.join(columns)}), found {df.shape[1]}")
    df.columns = columns
    return df


def _write_table(df: pd.DataFrame, path: PathLike, columns: List[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    missing = set(columns) - set(df.columns)
    if missing:
        raise FormatError(f"Missing required columns: {sorted(missing)}")
    df[columns].to_csv(path, sep=" ", header=False, index=False)
    return path


class CorpusImporter:
    """Load and validate manifests, trial lists and score files."""

    def __init__(self, data_dir: PathLike = "data"):
        self.data_dir = Path(data_dir)

    def read_manifest(self, path: PathLike) -> pd.DataFrame:
        """
        Read a manifest and resolve audio paths against its directory.

        Returns:
            DataFrame with utt_id, speaker_id and an absolute `path`
        """
        path = Path(path)
        df = _read_table(path, MANIFEST_COLUMNS)
        duplicates = df["utt_id"][df["utt_id"].duplicated()]
        if not duplicates.empty:
            raise FormatError(f"{path}: duplicate utterance id '{duplicates.iloc[0]}'")
        df["path"] = [str((path.parent / p).resolve()) if not Path(p).is_absolute() else p for p in df["path"]]
        return df.reset_index(drop=True)

    def write_manifest(self, manifest: pd.DataFrame, path: PathLike) -> Path:
        return _write_table(manifest, path, MANIFEST_COLUMNS)

    def read_trials(self, path: PathLike) -> pd.DataFrame:
        df = _read_table(path, TRIAL_COLUMNS)
        bad = df[~df["label"].isin(["0", "1"])]
        if not bad.empty:
            raise FormatError(f"{path}: trial label must be 1 or 0, got '{bad['label'].iloc[0]}'")
        df["label"] = df["label"].astype(np.int64)
        return df.reset_index(drop=True)

    def write_trials(self, trials: pd.DataFrame, path: PathLike) -> Path:
        return _write_table(trials, path, TRIAL_COLUMNS)

    def read_scores(self, path: PathLike) -> pd.DataFrame:
        df = _read_table(path, SCORE_COLUMNS)
        try:
            df["score"] = df["score"].astype(np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: non-numeric score ({exc})") from exc
        if not np.all(np.isfinite(df["score"].to_numpy())):
            raise FormatError(f"{path}: scores must be finite")
        return df.reset_index(drop=True)

    def write_scores(self, scores: pd.DataFrame, path: PathLike) -> Path:
        scores = scores.copy()
        scores["score"] = [repr(float(s)) for s in scores["score"]]
        return _write_table(scores, path, SCORE_COLUMNS)

    # ------------------------------------------------------------------
    # Corpus helpers
    # ------------------------------------------------------------------
    @staticmethod
    def speaker_labels(manifest: pd.DataFrame) -> Dict[str, int]:
        """Speaker id -> class index, in sorted id order."""
        return {spk: i for i, spk in enumerate(sorted(manifest["speaker_id"].unique()))}

    @staticmethod
    def split_manifest(manifest: pd.DataFrame, holdout_per_speaker: int) -> Tuple[pd.DataFrame, pd.DataFrame]:
        """Last `holdout_per_speaker` utterances of every speaker go to the held-out part."""
        position = manifest.groupby("speaker_id").cumcount(ascending=False)
        heldout = position < holdout_per_speaker
        return manifest[~heldout].reset_index(drop=True), manifest[heldout].reset_index(drop=True)

    @staticmethod
    def make_trials(manifest: pd.DataFrame, n_trials: int, seed: int = 0) -> pd.DataFrame:
        """
        Balanced random trial list: half same-speaker, half cross-speaker pairs.

        Raises:
            FormatError: if the manifest cannot supply both trial kinds
        """
        rng = np.random.default_rng(seed)
        by_speaker = {spk: group["utt_id"].tolist() for spk, group in manifest.groupby("speaker_id", sort=True)}
        eligible = [spk for spk, utts in by_speaker.items() if len(utts) >= 2]
        speakers = sorted(by_speaker)
        if not eligible or len(speakers) < 2:
            raise FormatError("trial generation needs >= 2 speakers and one speaker with >= 2 utterances")

        rows = []
        n_target = n_trials // 2
        for i in range(n_trials):
            if i < n_target:
                spk = eligible[rng.integers(len(eligible))]
                enroll, test = rng.choice(by_speaker[spk], size=2, replace=False)
                rows.append((1, str(enroll), str(test)))
            else:
                a, b = rng.choice(len(speakers), size=2, replace=False)
                enroll = by_speaker[speakers[a]][rng.integers(len(by_speaker[speakers[a]]))]
                test = by_speaker[speakers[b]][rng.integers(len(by_speaker[speakers[b]]))]
                rows.append((0, str(enroll), str(test)))
        return pd.DataFrame(rows, columns=TRIAL_COLUMNS)

    @staticmethod
    def load_features(manifest: pd.DataFrame, limit: Optional[int] = None) -> Dict[str, LogMelFeatures]:
        """Features per utterance; `.sekf` paths are read directly, audio is converted."""
        features = {}
        rows = manifest if limit is None else manifest.head(limit)
        for row in rows.itertuples(index=False):
            path = Path(row.path)
            if path.suffix.lower() == ".sekf":
                features[row.utt_id] = read_sekf(path)
            else:
                features[row.utt_id] = log_mel_features(load_waveform(path))
        logger.info("Loaded features for %d utterances", len(features))
        return features


def main():
    """Build a trial list from a demo manifest."""
    manifest = pd.DataFrame(
        {
            "utt_id": [f"spk{s:03d}-utt{u:03d}" for s in range(3) for u in range(4)],
            "speaker_id": [f"spk{s:03d}" for s in range(3) for _ in range(4)],
            "path": [f"audio/spk{s:03d}-utt{u:03d}.wav" for s in range(3) for u in range(4)],
        }
    )
    importer = CorpusImporter()
    train, heldout = importer.split_manifest(manifest, holdout_per_speaker=1)
    trials = importer.make_trials(manifest, n_trials=6, seed=0)
    print(f"{len(train)} training / {len(heldout)} held-out utterances")
    print(trials.to_string(index=False))


if __name__ == "__main__":
    main()

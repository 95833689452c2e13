"""Score sets and trial scoring against an embedding store."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from ..errors import FormatError, ShapeMismatchError
from ..head.scoring import EmbeddingStore, cosine_score

logger = logging.getLogger(__name__)


@dataclass
class ScoreSet:
    """Parallel score / label arrays (label True = target trial)."""

    scores: np.ndarray
    labels: np.ndarray
    enroll_ids: Optional[np.ndarray] = field(default=None, repr=False)
    test_ids: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        self.labels = np.asarray(self.labels).astype(bool).reshape(-1)
        if self.scores.shape != self.labels.shape:
            raise ShapeMismatchError(f"{self.scores.size} scores but {self.labels.size} labels")
        if not np.all(np.isfinite(self.scores)):
            raise FormatError("scores must be finite")

    def __len__(self) -> int:
        return self.scores.size

    @property
    def targets(self) -> np.ndarray:
        return self.scores[self.labels]

    @property
    def nontargets(self) -> np.ndarray:
        return self.scores[~self.labels]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "enroll_id": self.enroll_ids if self.enroll_ids is not None else [""] * len(self),
                "test_id": self.test_ids if self.test_ids is not None else [""] * len(self),
                "score": self.scores,
                "label": self.labels.astype(np.int64),
            }
        )

    @classmethod
    def from_frames(cls, trials: pd.DataFrame, scores: pd.DataFrame) -> "ScoreSet":
        """Join a trial list with a score file on (enroll_id, test_id)."""
        merged = trials.merge(scores, on=["enroll_id", "test_id"], how="left", validate="many_to_one")
        missing = merged[merged["score"].isna()]
        if not missing.empty:
            row = missing.iloc[0]
            raise FormatError(f"no score for trial {row['enroll_id']} {row['test_id']}")
        return cls(
            scores=merged["score"].to_numpy(),
            labels=merged["label"].to_numpy(),
            enroll_ids=merged["enroll_id"].to_numpy(),
            test_ids=merged["test_id"].to_numpy(),
        )


def evaluate_trials(trials: pd.DataFrame, store: EmbeddingStore) -> ScoreSet:
    """
    Cosine score of every (enroll_id, test_id) trial.

    Raises:
        MissingIdError: naming the first id absent from the store
    """
    enroll = trials["enroll_id"].to_numpy() if len(trials) else np.array([], dtype=object)
    test = trials["test_id"].to_numpy() if len(trials) else np.array([], dtype=object)
    labels = trials["label"].to_numpy() if len(trials) else np.array([], dtype=bool)
    scores = np.array([cosine_score(store[e], store[t]) for e, t in zip(enroll, test)], dtype=np.float64)
    logger.debug("Scored %d trials", scores.size)
    return ScoreSet(scores=scores, labels=labels, enroll_ids=enroll, test_ids=test)

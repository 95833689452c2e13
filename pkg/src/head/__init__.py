"""Pooling, embedding projection, AM-softmax loss and cosine scoring."""

from .loss import AMSoftmaxLoss
from .pooling import AttentiveStatsPooling, EmbeddingProjection
from .scoring import EmbeddingStore, cosine_score, read_seke, write_seke

__all__ = [
    "AMSoftmaxLoss",
    "AttentiveStatsPooling",
    "EmbeddingProjection",
    "EmbeddingStore",
    "cosine_score",
    "read_seke",
    "write_seke",
]

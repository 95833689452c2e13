"""Embedding extraction from a checkpoint over a manifest."""

import logging
from pathlib import Path
from typing import Dict, Optional, Union

import pandas as pd

from ..collectors.corpus_importer import CorpusImporter
from ..frontend import LogMelFeatures
from ..head.scoring import EmbeddingStore
from ..models.embedder import SpeakerEmbedder
from .checkpoint import CheckpointFile, load_checkpoint, restore_model

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def extract_embeddings(
    embedder: SpeakerEmbedder,
    manifest: pd.DataFrame,
    features: Optional[Dict[str, LogMelFeatures]] = None,
) -> EmbeddingStore:
    """One eval-mode embedding per manifest utterance, in manifest order."""
    features = features if features is not None else CorpusImporter.load_features(manifest)
    store = EmbeddingStore()
    for i, utt_id in enumerate(manifest["utt_id"], start=1):
        store.add(utt_id, embedder.embed(features[utt_id]))
        if i % 100 == 0:
            logger.info("Extracted %d/%d embeddings", i, len(manifest))
    logger.info("Extracted %d embeddings of dim %d", len(store), embedder.embedding_dim)
    return store


def extract_from_checkpoint(
    checkpoint: Union[PathLike, CheckpointFile],
    manifest: pd.DataFrame,
    features: Optional[Dict[str, LogMelFeatures]] = None,
) -> EmbeddingStore:
    """
    Raises:
        CheckpointMismatchError: if the stored state does not fit its config
    """
    ckpt = checkpoint if isinstance(checkpoint, CheckpointFile) else load_checkpoint(checkpoint)
    model = restore_model(ckpt)
    return extract_embeddings(model.embedder, manifest, features)

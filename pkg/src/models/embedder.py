"""
Full speaker-embedding model: encoder -> attentive statistics pooling ->
linear projection, plus the AM-softmax classifier used during training.
"""

import logging
from typing import Optional, Union

import numpy as np

from ..blocks.layers import Module
from ..frontend import LogMelFeatures, fit_to_multiple
from ..head import AMSoftmaxLoss, AttentiveStatsPooling, EmbeddingProjection
from ..head.pooling import ASP_BOTTLENECK, EMBEDDING_DIM
from ..tensor import Tensor, no_grad
from .le_conformer import LEConformer, LEConformerConfig
from .sst import SpeakerSwinTransformer, SSTConfig

logger = logging.getLogger(__name__)

Encoder = Union[LEConformer, SpeakerSwinTransformer]


class SpeakerEmbedder(Module):
    """(batch, T, 80) log-Mel features -> (batch, embedding_dim) speaker embeddings."""

    def __init__(
        self,
        encoder: Encoder,
        embedding_dim: int = EMBEDDING_DIM,
        bottleneck: int = ASP_BOTTLENECK,
        seed: int = 0,
    ):
        super().__init__()
        rng = np.random.default_rng(seed + 1)
        self.encoder = encoder
        self.pooling = AttentiveStatsPooling(encoder.output_dim, bottleneck, rng=rng)
        self.projection = EmbeddingProjection(self.pooling.output_dim, embedding_dim, rng=rng)

    @property
    def embedding_dim(self) -> int:
        return self.projection.out_features

    def forward(self, feats: Union[Tensor, np.ndarray]) -> Tensor:
        if not isinstance(feats, Tensor):
            feats = Tensor(np.asarray(feats), dtype=self.dtype)
        return self.projection(self.pooling(self.encoder(feats)))

    def eval_crop(self, features: LogMelFeatures) -> LogMelFeatures:
        """Deterministic crop used at extraction time."""
        if isinstance(self.encoder, SpeakerSwinTransformer):
            return fit_to_multiple(features, self.encoder.config.chunk_frames)
        return fit_to_multiple(features, 4)

    def embed(self, features: LogMelFeatures) -> np.ndarray:
        """Embedding of one utterance in eval mode, without recording a tape."""
        was_training = self.training
        self.eval()
        try:
            frames = self.eval_crop(features).frames[None]
            with no_grad():
                return self.forward(frames).data[0].copy()
        finally:
            self.train(was_training)


class SpeakerModel(Module):
    """Embedder plus classifier; the unit that is trained and checkpointed."""

    def __init__(self, embedder: SpeakerEmbedder, num_speakers: int, margin: float, scale: float, seed: int = 0):
        super().__init__()
        self.embedder = embedder
        self.classifier = AMSoftmaxLoss(
            embedder.embedding_dim, num_speakers, margin, scale, rng=np.random.default_rng(seed + 2)
        )

    def forward(self, feats, labels) -> Tensor:
        return self.classifier(self.embedder(feats), labels)


def build_encoder(config) -> Encoder:
    """Encoder for a RunConfig (or an architecture config directly)."""
    arch = config.architecture() if hasattr(config, "architecture") else config
    seed = getattr(config, "seed", 0)
    if isinstance(arch, LEConformerConfig):
        return LEConformer(arch, seed=seed)
    if isinstance(arch, SSTConfig):
        return SpeakerSwinTransformer(arch, seed=seed)
    raise TypeError(f"unsupported encoder config {type(arch).__name__}")


def build_embedder(config) -> SpeakerEmbedder:
    return SpeakerEmbedder(build_encoder(config), config.embedding_dim, config.asp_bottleneck, seed=config.seed)


def build_model(config, num_speakers: int) -> SpeakerModel:
    """Trainable model for a RunConfig and a speaker count."""
    model = SpeakerModel(build_embedder(config), num_speakers, config.margin, config.scale, seed=config.seed)
    logger.info(
        "Built %s model: %s parameters, embedding dim %d",
        config.model,
        f"{model.num_parameters():,}",
        model.embedder.embedding_dim,
    )
    return model


def main():
    """Embed a random utterance with untrained toy models of both encoders."""
    rng = np.random.default_rng(0)
    feats = LogMelFeatures(frames=rng.standard_normal((300, 80)))
    for encoder in (LEConformer(LEConformerConfig.toy()), SpeakerSwinTransformer(SSTConfig.toy())):
        embedder = SpeakerEmbedder(encoder)
        vector = embedder.embed(feats)
        print(f"{type(encoder).__name__}: {embedder.num_parameters():,} parameters -> embedding {vector.shape}")


if __name__ == "__main__":
    main()

"""Encoders (LE-Conformer, Speaker Swin Transformer) and the full embedding model."""

from .embedder import SpeakerEmbedder, SpeakerModel, build_embedder, build_encoder, build_model
from .le_conformer import LEConformer, LEConformerBlock, LEConformerConfig, VGGSubsampler, aggregate_blocks
from .sst import (
    PatchEmbed,
    PatchMerge,
    SpeakerSwinTransformer,
    SSTConfig,
    attention_cost,
    chunk_split,
    stage_shapes,
    window_attention,
    window_partition,
    window_reverse,
)

__all__ = [
    "SpeakerEmbedder",
    "SpeakerModel",
    "build_embedder",
    "build_encoder",
    "build_model",
    "LEConformer",
    "LEConformerBlock",
    "LEConformerConfig",
    "VGGSubsampler",
    "aggregate_blocks",
    "PatchEmbed",
    "PatchMerge",
    "SpeakerSwinTransformer",
    "SSTConfig",
    "attention_cost",
    "chunk_split",
    "stage_shapes",
    "window_attention",
    "window_partition",
    "window_reverse",
]

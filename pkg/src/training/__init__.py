"""Run configuration, optimiser, training loop, checkpoints and extraction."""

from .checkpoint import CheckpointFile, load_checkpoint, restore_model, save_checkpoint
from .config import RunConfig, build_config, format_config, load_config, parse_config, save_config, with_overrides
from .extract import extract_embeddings, extract_from_checkpoint
from .optim import AdamW, learning_rate
from .trainer import Trainer, TrainingResult, train

__all__ = [
    "AdamW",
    "CheckpointFile",
    "RunConfig",
    "Trainer",
    "TrainingResult",
    "build_config",
    "extract_embeddings",
    "extract_from_checkpoint",
    "format_config",
    "learning_rate",
    "load_checkpoint",
    "load_config",
    "parse_config",
    "restore_model",
    "save_checkpoint",
    "save_config",
    "train",
    "with_overrides",
]

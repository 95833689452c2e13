"""
Training loop: speaker-balanced batches of random segments, AM-softmax
loss, AdamW with the warm-up schedule, CSV loss log and periodic
checkpoints.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..collectors.corpus_importer import CorpusImporter
from ..errors import ConfigValidationError, NonFiniteLossError
from ..frontend import LogMelFeatures, crop_segment
from ..models.embedder import SpeakerModel, build_model
from .checkpoint import save_checkpoint
from .config import RunConfig
from .optim import AdamW, learning_rate

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

LOG_COLUMNS = ["step", "lr", "loss"]
SAMPLER_STREAM = 7


@dataclass
class TrainingResult:
    log: pd.DataFrame
    checkpoint: Path
    checkpoints: List[Path]
    steps: int

    @property
    def final_loss(self) -> float:
        return float(self.log["loss"].iloc[-1])


class Trainer:
    """Train a SpeakerModel on a manifest of utterances."""

    def __init__(
        self,
        config: RunConfig,
        manifest: pd.DataFrame,
        output_dir: PathLike,
        features: Optional[Dict[str, LogMelFeatures]] = None,
    ):
        """
        Args:
            config: Validated run configuration
            manifest: utt_id, speaker_id, path (absolute paths)
            output_dir: Receives train_log.csv, checkpoints/ and final.sekt
            features: Pre-computed features per utt_id (loaded from the manifest if None)
        """
        speakers = CorpusImporter.speaker_labels(manifest)
        if len(speakers) < 2:
            raise ConfigValidationError(f"training needs at least 2 speakers, manifest has {len(speakers)}")
        self.config = config
        self.manifest = manifest.reset_index(drop=True)
        self.output_dir = Path(output_dir)
        self.speakers = speakers
        self.features = features if features is not None else CorpusImporter.load_features(self.manifest)

        self.utt_ids = self.manifest["utt_id"].tolist()
        self.labels = np.array([speakers[s] for s in self.manifest["speaker_id"]], dtype=np.int64)
        self.by_speaker = [np.flatnonzero(self.labels == k) for k in range(len(speakers))]

        self.model: SpeakerModel = build_model(config, len(speakers))
        self.optimizer = AdamW(
            self.model.parameters(),
            lr=config.lr,
            betas=(config.beta1, config.beta2),
            eps=config.adam_eps,
            weight_decay=config.weight_decay,
        )
        self.sampler = np.random.default_rng([config.seed, SAMPLER_STREAM])

    def learning_rate(self, step: int) -> float:
        cfg = self.config
        return learning_rate(step, cfg.lr, cfg.warmup_steps, cfg.schedule, cfg.min_lr, cfg.cycle_steps)

    def sample_batch(self, step: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Draw speakers uniformly, then one utterance per drawn speaker, and
        crop one segment from each.

        The crop of an utterance is fixed per (seed, epoch, utterance).
        """
        cfg = self.config
        drawn = self.sampler.integers(len(self.by_speaker), size=cfg.batch_size)
        indices = [int(self.sampler.choice(self.by_speaker[k])) for k in drawn]
        epoch = (step - 1) * cfg.batch_size // len(self.utt_ids)
        frames = np.stack(
            [
                crop_segment(
                    self.features[self.utt_ids[i]],
                    cfg.segment_frames,
                    np.random.default_rng([cfg.seed, epoch, i]),
                ).frames
                for i in indices
            ]
        )
        return frames, self.labels[indices]

    def train_step(self, step: int) -> Tuple[float, float]:
        """One optimiser step (1-based). Returns (lr, loss)."""
        frames, labels = self.sample_batch(step)
        self.model.train()
        self.optimizer.zero_grad()
        loss = self.model(frames, labels)
        value = loss.item()
        if not np.isfinite(value):
            raise NonFiniteLossError(step, value)
        loss.backward()
        lr = self.learning_rate(step)
        self.optimizer.step(lr)
        return lr, value

    def run(self, steps: Optional[int] = None) -> TrainingResult:
        steps = self.config.steps if steps is None else steps
        self.output_dir.mkdir(parents=True, exist_ok=True)
        log_path = self.output_dir / "train_log.csv"
        rows = []
        checkpoints = []
        logger.info(
            "Training %s on %d utterances of %d speakers for %d steps",
            self.config.model,
            len(self.utt_ids),
            len(self.speakers),
            steps,
        )
        for step in range(1, steps + 1):
            lr, loss = self.train_step(step)
            rows.append({"step": step, "lr": lr, "loss": loss})
            if step % self.config.log_every == 0 or step == steps:
                recent = np.mean([r["loss"] for r in rows[-self.config.log_every:]])
                logger.info("step %d/%d lr %.3g loss %.4f", step, steps, lr, recent)
                pd.DataFrame(rows, columns=LOG_COLUMNS).to_csv(log_path, index=False)
            every = self.config.checkpoint_every
            if every and step % every == 0 and step != steps:
                checkpoints.append(
                    save_checkpoint(self.output_dir / "checkpoints" / f"step_{step:06d}.sekt", self.model, self.config, step)
                )

        log = pd.DataFrame(rows, columns=LOG_COLUMNS)
        log.to_csv(log_path, index=False)
        final = save_checkpoint(self.output_dir / "final.sekt", self.model, self.config, steps)
        checkpoints.append(final)
        return TrainingResult(log=log, checkpoint=final, checkpoints=checkpoints, steps=steps)


def train(config: RunConfig, manifest: pd.DataFrame, output_dir: PathLike, **kwargs) -> TrainingResult:
    return Trainer(config, manifest, output_dir, **kwargs).run()


def main():
    """Train a toy LE-Conformer on a small synthetic corpus."""
    from ..collectors.synth_generator import SyntheticCorpusGenerator
    from .config import build_config

    data_dir = Path("data/train_demo")
    SyntheticCorpusGenerator(data_dir=data_dir / "corpus", seed=0).generate(n_speakers=4, utts_per_speaker=3)
    manifest = CorpusImporter(data_dir).read_manifest(data_dir / "corpus" / "manifest.txt")
    config = build_config(
        {
            "blocks": 1, "heads": 2, "model_dim": 32, "conv_kernel": 7, "ffn_hidden": 64,
            "vgg_channels": [4, 8], "se_reduction": 8, "embedding_dim": 32, "asp_bottleneck": 16,
            "lr": 1e-3, "warmup_steps": 5, "batch_size": 8, "segment_frames": 100, "steps": 20,
            "log_every": 5,
        }
    )
    result = train(config, manifest, data_dir / "run")
    first, last = result.log["loss"].iloc[:5].mean(), result.log["loss"].iloc[-5:].mean()
    print(f"Loss {first:.3f} -> {last:.3f} over {result.steps} steps; checkpoint {result.checkpoint}")


if __name__ == "__main__":
    main()

import numpy as np
import pytest

from src.training.config import build_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_le_config():
    """RunConfig for an LE-Conformer small enough to train in a few seconds."""
    return build_config(
        {
            "model": "le_conformer",
            "n_mels": 80,
            "blocks": 1,
            "heads": 2,
            "model_dim": 16,
            "conv_kernel": 3,
            "ffn_hidden": 32,
            "se_reduction": 8,
            "vgg_channels": [2, 4],
            "embedding_dim": 8,
            "asp_bottleneck": 8,
            "lr": 1e-3,
            "warmup_steps": 2,
            "schedule": "linear_warmup_constant",
            "batch_size": 4,
            "segment_frames": 40,
            "steps": 4,
            "log_every": 2,
        }
    )


@pytest.fixture
def tiny_sst_config():
    return build_config(
        {
            "model": "sst",
            "n_mels": 80,
            "chunk_frames": 16,
            "patch": 3,
            "stride": 2,
            "embed_dim": 4,
            "window": 2,
            "depths": [2],
            "stage_heads": [2],
            "mlp_ratio": 2,
            "embedding_dim": 8,
            "asp_bottleneck": 8,
            "lr": 1e-3,
            "warmup_steps": 2,
            "batch_size": 4,
            "segment_frames": 32,
            "steps": 3,
            "log_every": 1,
        }
    )


@pytest.fixture(scope="session")
def synth_corpus(tmp_path_factory):
    """Four speakers with three short utterances each, written once per session."""
    from src.collectors.corpus_importer import CorpusImporter
    from src.collectors.synth_generator import SyntheticCorpusGenerator

    root = tmp_path_factory.mktemp("corpus")
    SyntheticCorpusGenerator(data_dir=root, seed=0).generate(n_speakers=4, utts_per_speaker=3)
    manifest = CorpusImporter(root).read_manifest(root / "manifest.txt")
    return root, manifest


@pytest.fixture(scope="session")
def corpus_features(synth_corpus):
    from src.collectors.corpus_importer import CorpusImporter

    _, manifest = synth_corpus
    return CorpusImporter.load_features(manifest)

from pathlib import Path

import pytest

from src.errors import ConfigValidationError
from src.models import LEConformerConfig, SSTConfig, build_model
from src.training import format_config, load_config, parse_config, save_config, with_overrides

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.conf")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    config = load_config(path)
    assert isinstance(config.architecture(), (LEConformerConfig, SSTConfig))


def test_full_configs_carry_the_published_constants():
    le = load_config(CONFIG_DIR / "le_conformer_full.conf")
    assert (le.blocks, le.heads, le.model_dim, le.conv_kernel, le.ffn_hidden) == (6, 4, 512, 15, 2048)
    assert (le.embedding_dim, le.margin, le.scale, le.segment_frames) == (256, 0.2, 30.0, 200)
    sst = load_config(CONFIG_DIR / "sst_full.conf")
    assert (sst.patch, sst.stride, sst.embed_dim, sst.window) == (7, 4, 96, 5)
    assert sst.depths == [2, 2, 6, 2]
    assert (sst.segment_frames, sst.chunk_frames) == (320, 160)


def test_text_round_trip(tiny_le_config, tmp_path):
    text = format_config(tiny_le_config)
    assert parse_config(text) == tiny_le_config
    assert format_config(load_config(save_config(tiny_le_config, tmp_path / "run.conf"))) == text


def test_comments_and_blank_lines_are_ignored():
    config = parse_config("# header\n\nmodel = sst  # inline\nsegment_frames = 320\n")
    assert config.model == "sst"
    assert config.segment_frames == 320


def test_unknown_key_is_rejected_with_its_line():
    with pytest.raises(ConfigValidationError, match="2: unknown key 'depth'"):
        parse_config("model = sst\ndepth = 3\n")


def test_duplicate_key_is_rejected():
    with pytest.raises(ConfigValidationError, match="duplicate key 'seed'"):
        parse_config("seed = 1\nseed = 2\n")


def test_line_without_equals_is_rejected():
    with pytest.raises(ConfigValidationError, match="expected 'key = value'"):
        parse_config("model le_conformer\n")


@pytest.mark.parametrize(
    "text",
    [
        "enable_se = maybe\n",
        "batch_size = 0\n",
        "model = resnet\n",
        "lr = fast\n",
        "min_lr = 1.0\nlr = 0.1\n",
        "model = sst\nsegment_frames = 100\n",
        "model_dim = 510\n",
        "dropout = 1.0\n",
    ],
)
def test_invalid_values_are_rejected(text):
    with pytest.raises(ConfigValidationError):
        parse_config(text)


def test_overrides_are_validated(tiny_le_config):
    assert with_overrides(tiny_le_config, steps=9).steps == 9
    with pytest.raises(ConfigValidationError):
        with_overrides(tiny_le_config, steps=-1)


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigValidationError, match="cannot read config"):
        load_config(tmp_path / "absent.conf")


def _registry(name):
    model = build_model(load_config(CONFIG_DIR / name), num_speakers=4)
    return {key: p.shape for key, p in model.embedder.encoder.named_parameters()}


@pytest.mark.parametrize(
    "base,ablation",
    [
        ("le_conformer_toy.conf", "le_conformer_no_se.conf"),
        ("le_conformer_toy.conf", "le_conformer_no_dwconv.conf"),
        ("le_conformer_toy.conf", "le_conformer_weighted_avg.conf"),
        ("sst_toy.conf", "sst_non_ope.conf"),
    ],
)
def test_ablation_configs_build_distinct_registries(base, ablation):
    assert _registry(base) != _registry(ablation)


def test_no_concat_ablation_shrinks_the_pooled_dimension():
    base = build_model(load_config(CONFIG_DIR / "le_conformer_toy.conf"), num_speakers=4)
    last = build_model(load_config(CONFIG_DIR / "le_conformer_no_concat.conf"), num_speakers=4)
    assert last.embedder.pooling.input_dim < base.embedder.pooling.input_dim

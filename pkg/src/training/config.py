"""
Run configuration: a flat, validated record of every architecture,
head, optimiser and data setting, stored on disk as `key = value` lines.

    # comment
    model = le_conformer
    vgg_channels = 32, 64
    enable_se = true
"""

import logging
from pathlib import Path
from typing import List, Literal, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ..errors import ConfigValidationError
from ..models.le_conformer import LEConformerConfig
from ..models.sst import SSTConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class RunConfig(BaseModel):
    """Every field is a config key; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True, protected_namespaces=())

    model: Literal["le_conformer", "sst"] = "le_conformer"
    seed: int = 0
    n_mels: int = 80

    # LE-Conformer
    blocks: int = 6
    heads: int = 4
    model_dim: int = 512
    conv_kernel: int = 15
    ffn_hidden: int = 2048
    ffn_kernel: int = 3
    se_reduction: int = 16
    aggregation: Literal["concat", "weighted_avg", "last_only"] = "concat"
    enable_se: bool = True
    enable_dwconv: bool = True
    vgg_channels: List[int] = [32, 64]
    relative_position: Literal["conformer_rel", "none"] = "conformer_rel"
    dropout: float = 0.0

    # Speaker Swin Transformer
    chunk_frames: int = 160
    patch: int = 7
    stride: int = 4
    patch_mode: Literal["overlapping", "non_overlapping"] = "overlapping"
    embed_dim: int = 96
    window: int = 5
    depths: List[int] = [2, 2, 6, 2]
    stage_heads: List[int] = [3, 6, 12, 24]
    mlp_ratio: int = 4
    freq_reduction: Literal["fold", "mean"] = "fold"

    # Head
    embedding_dim: int = 256
    asp_bottleneck: int = 128
    margin: float = 0.2
    scale: float = 30.0

    # Optimiser
    lr: float = 3e-4
    min_lr: float = 1e-8
    weight_decay: float = 5e-2
    warmup_steps: int = 45000
    schedule: Literal["linear_warmup_cyclic", "linear_warmup_constant"] = "linear_warmup_cyclic"
    cycle_steps: int = 10000
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    # Data and loop
    batch_size: int = 128
    segment_frames: int = 200
    steps: int = 300
    log_every: int = 10
    checkpoint_every: int = 0

    @field_validator(
        "n_mels", "blocks", "heads", "model_dim", "ffn_hidden", "embedding_dim", "asp_bottleneck",
        "batch_size", "segment_frames", "steps", "chunk_frames", "embed_dim", "window", "cycle_steps",
        "log_every",
    )
    @classmethod
    def _positive(cls, value: int, info) -> int:
        if value <= 0:
            raise ValueError(f"{info.field_name} must be positive, got {value}")
        return value

    @field_validator("warmup_steps", "checkpoint_every")
    @classmethod
    def _non_negative(cls, value: int, info) -> int:
        if value < 0:
            raise ValueError(f"{info.field_name} must be >= 0, got {value}")
        return value

    @field_validator("lr", "scale")
    @classmethod
    def _positive_float(cls, value: float, info) -> float:
        if value <= 0:
            raise ValueError(f"{info.field_name} must be positive, got {value}")
        return value

    @field_validator("dropout")
    @classmethod
    def _probability(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _check_architecture(self) -> "RunConfig":
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if not 0 <= self.min_lr <= self.lr:
            raise ValueError(f"min_lr must lie in [0, lr], got {self.min_lr}")
        if self.segment_frames < 4:
            raise ValueError("segment_frames must be at least 4")
        if self.model == "sst" and self.segment_frames % self.chunk_frames:
            raise ValueError(f"segment_frames {self.segment_frames} not divisible by chunk_frames {self.chunk_frames}")
        self.architecture()
        return self

    def architecture(self) -> Union[LEConformerConfig, SSTConfig]:
        """The encoder config selected by `model`."""
        if self.model == "le_conformer":
            return LEConformerConfig(
                n_mels=self.n_mels,
                blocks=self.blocks,
                heads=self.heads,
                model_dim=self.model_dim,
                conv_kernel=self.conv_kernel,
                ffn_hidden=self.ffn_hidden,
                ffn_kernel=self.ffn_kernel,
                se_reduction=self.se_reduction,
                aggregation=self.aggregation,
                enable_se=self.enable_se,
                enable_dwconv=self.enable_dwconv,
                vgg_channels=tuple(self.vgg_channels),
                relative_position=self.relative_position,
                dropout=self.dropout,
            )
        return SSTConfig(
            n_mels=self.n_mels,
            chunk_frames=self.chunk_frames,
            patch=self.patch,
            stride=self.stride,
            patch_mode=self.patch_mode,
            embed_dim=self.embed_dim,
            window=self.window,
            depths=tuple(self.depths),
            heads=tuple(self.stage_heads),
            mlp_ratio=self.mlp_ratio,
            freq_reduction=self.freq_reduction,
        )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Canonical text: every field, declaration order, one `key = value` per line."""
    lines = [f"{name} = {_format_value(getattr(cfg, name))}" for name in RunConfig.model_fields]
    return "\n".join(lines) + "\n"


def _parse_value(name: str, raw: str):
    annotation = RunConfig.model_fields[name].annotation
    if getattr(annotation, "__origin__", None) in (list, List):
        return [item.strip() for item in raw.split(",") if item.strip()]
    if annotation is bool:
        lowered = raw.lower()
        if lowered not in ("true", "false"):
            raise ConfigValidationError(f"{name}: expected true/false, got '{raw}'")
        return lowered == "true"
    return raw


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Parse `key = value` text into a validated RunConfig.

    Raises:
        ConfigValidationError: malformed lines, unknown or duplicate keys, invalid values
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigValidationError(f"{source}:{lineno}: expected 'key = value', got '{line.strip()}'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in RunConfig.model_fields:
            raise ConfigValidationError(f"{source}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigValidationError(f"{source}:{lineno}: duplicate key '{key}'")
        values[key] = _parse_value(key, raw)
    return build_config(values, source)


def build_config(values: dict, source: str = "<config>") -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigValidationError(f"{source}: {problems}") from exc
    except ConfigValidationError as exc:
        raise ConfigValidationError(f"{source}: {exc}") from exc


def load_config(path: PathLike) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigValidationError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text, source=str(path))
    logger.debug("Loaded %s config from %s", cfg.model, path)
    return cfg


def save_config(cfg: RunConfig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(cfg), encoding="utf-8")
    return path


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Validated copy with some fields replaced."""
    return build_config({**cfg.model_dump(), **overrides})

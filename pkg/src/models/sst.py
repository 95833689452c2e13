"""
Speaker Swin Transformer encoder.

Features are split into temporal chunks; every chunk becomes a 2-D patch
grid laid out (time patches, frequency patches, channels) and runs through
hierarchical stages of local-window and shifted-window attention with
2x2 patch merging in between. The final grids of all chunks are
concatenated along time, and frequency is folded into the channel axis to
give frame vectors.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..blocks import MLP, MSAConfig, MultiHeadSelfAttention
from ..blocks.layers import Conv2d, LayerNorm, Linear, Module, ModuleList
from ..errors import ConfigValidationError, ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F

logger = logging.getLogger(__name__)

PATCH_MODES = ("overlapping", "non_overlapping")
FREQ_REDUCTIONS = ("fold", "mean")

GridShape = Tuple[int, int, int]


@dataclass(frozen=True)
class PatchEmbedConfig:
    patch: int = 7
    stride: int = 4
    channels: int = 96
    mode: str = "overlapping"

    def __post_init__(self):
        if self.mode not in PATCH_MODES:
            raise ConfigValidationError(f"patch mode must be one of {PATCH_MODES}, got {self.mode!r}")
        if self.mode == "overlapping" and not self.stride < self.patch:
            raise ConfigValidationError(f"overlapping patches need stride < patch, got {self.stride} >= {self.patch}")
        if self.mode == "non_overlapping" and self.stride != self.patch:
            raise ConfigValidationError(f"non-overlapping patches need stride == patch, got {self.stride} != {self.patch}")

    @property
    def padding(self) -> int:
        return self.patch // 2 if self.mode == "overlapping" else 0


@dataclass(frozen=True)
class WindowConfig:
    window: int = 5

    def __post_init__(self):
        if self.window < 1:
            raise ConfigValidationError(f"window must be >= 1, got {self.window}")

    @property
    def shift(self) -> int:
        return self.window // 2


@dataclass(frozen=True)
class SSTConfig:
    n_mels: int = 80
    chunk_frames: int = 160
    patch: int = 7
    stride: int = 4
    patch_mode: str = "overlapping"
    embed_dim: int = 96
    window: int = 5
    depths: Tuple[int, ...] = (2, 2, 6, 2)
    heads: Tuple[int, ...] = (3, 6, 12, 24)
    mlp_ratio: int = 4
    freq_reduction: str = "fold"

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        object.__setattr__(self, "heads", tuple(int(h) for h in self.heads))
        if len(self.depths) != len(self.heads) or not self.depths:
            raise ConfigValidationError(f"depths {self.depths} and heads {self.heads} must be non-empty and equal length")
        for i, (depth, heads) in enumerate(zip(self.depths, self.heads)):
            if depth < 2 or depth % 2:
                raise ConfigValidationError(f"stage {i + 1} depth must be even (LW/SLW pairs), got {depth}")
            if self.stage_channels[i] % heads:
                raise ConfigValidationError(
                    f"stage {i + 1} channels {self.stage_channels[i]} not divisible by heads {heads}"
                )
        if self.freq_reduction not in FREQ_REDUCTIONS:
            raise ConfigValidationError(f"freq_reduction must be one of {FREQ_REDUCTIONS}")
        if self.chunk_frames < 1:
            raise ConfigValidationError(f"chunk_frames must be positive, got {self.chunk_frames}")
        PatchEmbedConfig(self.patch, self.stride, self.embed_dim, self.patch_mode)
        WindowConfig(self.window)

    @classmethod
    def full(cls, **overrides) -> "SSTConfig":
        return replace(cls(), **overrides)

    @classmethod
    def toy(cls, **overrides) -> "SSTConfig":
        base = cls(chunk_frames=64, patch=3, stride=2, embed_dim=16, window=2, depths=(2, 2), heads=(2, 4))
        return replace(base, **overrides)

    @property
    def patch_embed(self) -> PatchEmbedConfig:
        return PatchEmbedConfig(self.patch, self.stride, self.embed_dim, self.patch_mode)

    @property
    def window_config(self) -> WindowConfig:
        return WindowConfig(self.window)

    @property
    def stage_channels(self) -> List[int]:
        return [self.embed_dim * 2 ** i for i in range(len(self.depths))]

    @property
    def output_dim(self) -> int:
        _, freq, channels = stage_shapes(self.chunk_frames, self)[-1]
        return freq * channels if self.freq_reduction == "fold" else channels


# ----------------------------------------------------------------------
# Shape oracle and cost model
# ----------------------------------------------------------------------
def patch_grid_extent(length: int, cfg: PatchEmbedConfig) -> int:
    if cfg.mode == "overlapping":
        return (length + 2 * cfg.padding - cfg.patch) // cfg.stride + 1
    return -(-length // cfg.patch)


def stage_shapes(chunk_frames: int, cfg: SSTConfig) -> List[GridShape]:
    """(time, freq, channels) of every stage's output grid for one chunk."""
    embed = cfg.patch_embed
    time, freq = patch_grid_extent(chunk_frames, embed), patch_grid_extent(cfg.n_mels, embed)
    shapes = []
    for i, channels in enumerate(cfg.stage_channels):
        if i > 0:
            time, freq = -(-time // 2), -(-freq // 2)
        shapes.append((time, freq, channels))
    return shapes


def output_shape(frames: int, cfg: SSTConfig) -> Tuple[int, int]:
    """(T_out, D_out) of the frame sequence for a `frames`-long input."""
    if frames % cfg.chunk_frames:
        raise ShapeMismatchError(f"{frames} frames not divisible by chunk length {cfg.chunk_frames}")
    time, _, _ = stage_shapes(cfg.chunk_frames, cfg)[-1]
    return (frames // cfg.chunk_frames) * time, cfg.output_dim


def attention_cost(freq: int, time: int, channels: int, window: int, mode: str) -> int:
    """
    Multiply-accumulate count of one attention layer on an f x t grid.

    global:   4ftC^2 + 2(ft)^2 C
    windowed: 4ftC^2 + 2M^2 ftC
    """
    for name, value in (("freq", freq), ("time", time), ("channels", channels), ("window", window)):
        if value <= 0:
            raise ShapeMismatchError(f"attention_cost: {name} must be positive, got {value}")
    tokens = freq * time
    projections = 4 * tokens * channels ** 2
    if mode == "global":
        return projections + 2 * tokens ** 2 * channels
    if mode == "windowed":
        return projections + 2 * window ** 2 * tokens * channels
    raise ShapeMismatchError(f"attention_cost: mode must be 'global' or 'windowed', got {mode!r}")


# ----------------------------------------------------------------------
# Chunking and windows
# ----------------------------------------------------------------------
def chunk_split(feats: np.ndarray, chunk_frames: int) -> List[np.ndarray]:
    """Contiguous temporal chunks of a (T, F) feature matrix, in order."""
    feats = np.asarray(feats)
    if feats.shape[0] % chunk_frames:
        raise ShapeMismatchError(f"T={feats.shape[0]} is not divisible by chunk length {chunk_frames}")
    return [feats[i:i + chunk_frames] for i in range(0, feats.shape[0], chunk_frames)]


def pad_to_multiple(x: Tensor, multiple: int) -> Tuple[Tensor, np.ndarray]:
    """
    Zero-pad a (N, H, W, C) grid at the bottom/right to multiples of `multiple`.

    Returns:
        Padded grid and an (Hp, Wp) boolean mask, True on original cells
    """
    _, height, width, _ = x.shape
    pad_h, pad_w = (-height) % multiple, (-width) % multiple
    valid = np.zeros((height + pad_h, width + pad_w), dtype=bool)
    valid[:height, :width] = True
    if pad_h or pad_w:
        x = F.pad(x, ((0, 0), (0, pad_h), (0, pad_w), (0, 0)))
    return x, valid


def window_partition(x: Tensor, window: int) -> Tensor:
    """(N, H, W, C) with H, W multiples of M -> (N * nH * nW, M*M, C), windows in raster order."""
    batch, height, width, channels = x.shape
    if height % window or width % window:
        raise ShapeMismatchError(f"grid {height}x{width} is not a multiple of window {window}; pad first")
    x = x.reshape(batch, height // window, window, width // window, window, channels)
    return x.transpose(0, 1, 3, 2, 4, 5).reshape(-1, window * window, channels)


def window_reverse(windows: Tensor, window: int, height: int, width: int) -> Tensor:
    """Inverse of window_partition."""
    channels = windows.shape[-1]
    x = windows.reshape(-1, height // window, width // window, window, window, channels)
    return x.transpose(0, 1, 3, 2, 4, 5).reshape(-1, height, width, channels)


def _partition_cells(cells: np.ndarray, window: int) -> np.ndarray:
    height, width = cells.shape
    blocks = cells.reshape(height // window, window, width // window, window)
    return blocks.transpose(0, 2, 1, 3).reshape(-1, window * window)


def shifted_region_labels(height: int, width: int, window: int, shift: int) -> np.ndarray:
    """Region id per cell of the rolled (Hp, Wp) grid; tokens may attend only within a region."""
    labels = np.zeros((height, width), dtype=np.int64)
    if shift == 0:
        return labels
    bands = (slice(0, -window), slice(-window, -shift), slice(-shift, None))
    label = 0
    for rows in bands:
        for cols in bands:
            labels[rows, cols] = label
            label += 1
    return labels


def window_attention_mask(valid: np.ndarray, window: int, shift: int) -> np.ndarray:
    """
    Additive mask (num_windows, M*M, M*M) for attention on a rolled, padded grid.

    Pairs from different shift regions and keys on padded cells get -inf.
    """
    height, width = valid.shape
    labels = _partition_cells(shifted_region_labels(height, width, window, shift), window)
    keys = _partition_cells(np.roll(valid, (-shift, -shift), axis=(0, 1)), window)
    allowed = (labels[:, :, None] == labels[:, None, :]) & keys[:, None, :]
    return np.where(allowed, 0.0, -np.inf)


def window_attention(
    x: Tensor,
    attn: MultiHeadSelfAttention,
    window: int,
    shift: int = 0,
    return_attention: bool = False,
) -> Union[Tensor, Tuple[Tensor, Tensor]]:
    """
    Local-window (shift=0) or shifted-window attention on a (N, H, W, C) grid.

    The grid is padded to multiples of M, cyclically rolled by -shift on
    both axes, partitioned into windows and attended with the region and
    padding mask; the result is reversed, rolled back and cropped.
    """
    if not 0 <= shift < window:
        raise ShapeMismatchError(f"shift must lie in [0, {window}), got {shift}")
    batch, height, width, channels = x.shape
    padded, valid = pad_to_multiple(x, window)
    hp, wp = valid.shape
    if shift:
        padded = F.roll(padded, (-shift, -shift), (1, 2))

    mask = window_attention_mask(valid, window, shift)
    num_windows = mask.shape[0]
    mask = np.broadcast_to(mask[None], (batch,) + mask.shape).reshape(batch * num_windows, 1, *mask.shape[1:])

    windows = window_partition(padded, window)
    out, probs = attn(windows, mask=mask, return_attention=True)
    out = window_reverse(out, window, hp, wp)
    if shift:
        out = F.roll(out, (shift, shift), (1, 2))
    if hp != height or wp != width:
        out = out[:, :height, :width, :]
    return (out, probs) if return_attention else out


# ----------------------------------------------------------------------
# Layers
# ----------------------------------------------------------------------
class PatchEmbed(Module):
    """Strided 2-D convolution from a (N, T, F) chunk to a (N, t, f, C) grid, then LayerNorm."""

    def __init__(self, cfg: PatchEmbedConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.config = cfg
        self.proj = Conv2d(1, cfg.channels, cfg.patch, stride=cfg.stride, padding=cfg.padding, rng=rng)
        self.norm = LayerNorm(cfg.channels)

    def forward(self, chunk: Tensor) -> Tensor:
        batch, steps, bins = chunk.shape
        cfg = self.config
        if cfg.mode == "non_overlapping":
            pad_t, pad_f = (-steps) % cfg.patch, (-bins) % cfg.patch
            if pad_t or pad_f:
                chunk = F.pad(chunk, ((0, 0), (0, pad_t), (0, pad_f)))
                steps, bins = steps + pad_t, bins + pad_f
        if steps + 2 * cfg.padding < cfg.patch or bins + 2 * cfg.padding < cfg.patch:
            raise ShapeMismatchError(f"chunk {steps}x{bins} is smaller than one {cfg.patch}x{cfg.patch} patch")
        grid = self.proj(chunk.reshape(batch, 1, steps, bins))
        return self.norm(grid.transpose(0, 2, 3, 1))


class PatchMerge(Module):
    """2x2 neighbourhoods concatenated to 4C and mapped linearly to 2C; odd extents zero-padded."""

    def __init__(self, channels: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.reduction = Linear(4 * channels, 2 * channels, bias=False, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        _, height, width, _ = x.shape
        pad_h, pad_w = height % 2, width % 2
        if pad_h or pad_w:
            x = F.pad(x, ((0, 0), (0, pad_h), (0, pad_w), (0, 0)))
        parts = [
            x[:, 0::2, 0::2, :],
            x[:, 1::2, 0::2, :],
            x[:, 0::2, 1::2, :],
            x[:, 1::2, 1::2, :],
        ]
        return self.reduction(F.concat(parts, axis=-1))


class SwinBlock(Module):
    """x + W-MSA(LN(x)); x + MLP(LN(x)). Odd blocks in a stage use the shifted windows."""

    def __init__(self, channels: int, heads: int, window: int, shift: int, mlp_ratio: int, rng=None):
        super().__init__()
        self.window, self.shift = window, shift
        self.norm1 = LayerNorm(channels)
        self.attn = MultiHeadSelfAttention(MSAConfig(channels, heads, "window_bias", window), rng=rng)
        self.norm2 = LayerNorm(channels)
        self.mlp = MLP(channels, mlp_ratio * channels, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        x = x + window_attention(self.norm1(x), self.attn, self.window, self.shift)
        return x + self.mlp(self.norm2(x))


class SwinStage(Module):
    def __init__(self, channels: int, depth: int, heads: int, window_cfg: WindowConfig, mlp_ratio: int,
                 merge: bool, rng=None):
        super().__init__()
        shifts = [0 if i % 2 == 0 else window_cfg.shift for i in range(depth)]
        self.blocks = ModuleList(
            [SwinBlock(channels, heads, window_cfg.window, s, mlp_ratio, rng=rng) for s in shifts]
        )
        self.merge = PatchMerge(channels, rng=rng) if merge else None

    def forward(self, x: Tensor) -> Tensor:
        for block in self.blocks:
            x = block(x)
        return x

    def downsample(self, x: Tensor) -> Tensor:
        return self.merge(x) if self.merge is not None else x


class SpeakerSwinTransformer(Module):
    """Frame-level encoder: (batch, T, 80) with T a multiple of the chunk length -> (batch, T_out, D_out)."""

    def __init__(self, cfg: SSTConfig, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.config = cfg
        self.patch_embed = PatchEmbed(cfg.patch_embed, rng=rng)
        last = len(cfg.depths) - 1
        self.stages = ModuleList(
            [
                SwinStage(channels, depth, heads, cfg.window_config, cfg.mlp_ratio, merge=i < last, rng=rng)
                for i, (channels, depth, heads) in enumerate(zip(cfg.stage_channels, cfg.depths, cfg.heads))
            ]
        )
        self.final_norm = LayerNorm(cfg.stage_channels[-1])

    @property
    def output_dim(self) -> int:
        return self.config.output_dim

    def stage_outputs(self, feats: Tensor) -> List[Tensor]:
        """Per-stage output grids (batch * chunks, t, f, C) before merging."""
        cfg = self.config
        batch, frames, bins = feats.shape
        if frames % cfg.chunk_frames:
            raise ShapeMismatchError(f"T={frames} is not divisible by chunk length {cfg.chunk_frames}")
        chunks = frames // cfg.chunk_frames
        x = self.patch_embed(feats.reshape(batch * chunks, cfg.chunk_frames, bins))
        outputs = []
        for stage in self.stages:
            x = stage(x)
            outputs.append(x)
            x = stage.downsample(x)
        return outputs

    def forward(self, feats: Tensor) -> Tensor:
        batch, frames, _ = feats.shape
        chunks = frames // self.config.chunk_frames
        grid = self.final_norm(self.stage_outputs(feats)[-1])
        _, time, freq, channels = grid.shape
        if self.config.freq_reduction == "fold":
            frames_out = grid.reshape(batch * chunks, time, freq * channels)
        else:
            frames_out = grid.mean(axis=2)
        return frames_out.reshape(batch, chunks * time, frames_out.shape[-1])


def main():
    """Print the full-scale shape walk and the attention cost model."""
    full = SSTConfig.full()
    print("Per-chunk stage grids (time x freq x channels):")
    for i, shape in enumerate(stage_shapes(full.chunk_frames, full), start=1):
        print(f"  stage {i}: {shape[0]} x {shape[1]} x {shape[2]}")
    print(f"320 x 80 segment -> frames {output_shape(320, full)}")
    for tokens in (800, 1600):
        g = attention_cost(20, tokens // 20, 96, 5, "global")
        w = attention_cost(20, tokens // 20, 96, 5, "windowed")
        print(f"  ft={tokens:5d}: global {g:,}  windowed {w:,}")

    toy = SSTConfig.toy()
    model = SpeakerSwinTransformer(toy).eval()
    feats = Tensor(np.random.default_rng(0).standard_normal((1, 128, 80)), dtype=np.float32)
    print(f"Toy SST: {model.num_parameters():,} parameters, {feats.shape} -> {model(feats).shape}")


if __name__ == "__main__":
    main()

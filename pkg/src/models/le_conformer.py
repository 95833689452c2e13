"""
Locality-Enhanced Conformer encoder.

VGG front-end (x4 subsampling in time and frequency) followed by N
macaron-style Conformer blocks whose feed-forward networks carry a
depth-wise convolution and an SE stage, and an aggregation of all block
outputs into one frame sequence.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..blocks import ConvolutionModule, LEFeedForward, MSAConfig, MultiHeadSelfAttention
from ..blocks.layers import Conv2d, DEFAULT_DTYPE, Dropout, LayerNorm, Linear, Module, ModuleList, Parameter
from ..errors import ConfigValidationError, ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F

logger = logging.getLogger(__name__)

AGGREGATION_MODES = ("concat", "weighted_avg", "last_only")


@dataclass(frozen=True)
class LEConformerConfig:
    n_mels: int = 80
    blocks: int = 6
    heads: int = 4
    model_dim: int = 512
    conv_kernel: int = 15
    ffn_hidden: int = 2048
    ffn_kernel: int = 3
    se_reduction: int = 16
    aggregation: str = "concat"
    enable_se: bool = True
    enable_dwconv: bool = True
    vgg_channels: Tuple[int, int] = (32, 64)
    relative_position: str = "conformer_rel"
    dropout: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "vgg_channels", tuple(int(c) for c in self.vgg_channels))
        if self.blocks < 1:
            raise ConfigValidationError(f"blocks must be >= 1, got {self.blocks}")
        if self.aggregation not in AGGREGATION_MODES:
            raise ConfigValidationError(f"aggregation must be one of {AGGREGATION_MODES}, got {self.aggregation!r}")
        if self.model_dim % self.heads != 0:
            raise ConfigValidationError(f"model_dim {self.model_dim} not divisible by heads {self.heads}")
        if self.conv_kernel % 2 == 0 or self.ffn_kernel % 2 == 0:
            raise ConfigValidationError("convolution kernel sizes must be odd")
        if self.enable_se and self.ffn_hidden % self.se_reduction != 0:
            raise ConfigValidationError(
                f"ffn_hidden {self.ffn_hidden} not divisible by se_reduction {self.se_reduction}"
            )
        if len(self.vgg_channels) != 2:
            raise ConfigValidationError(f"vgg_channels needs two stages, got {self.vgg_channels}")

    @classmethod
    def full(cls, **overrides) -> "LEConformerConfig":
        return replace(cls(), **overrides)

    @classmethod
    def toy(cls, **overrides) -> "LEConformerConfig":
        base = cls(blocks=3, heads=2, model_dim=64, conv_kernel=7, ffn_hidden=128, vgg_channels=(8, 16))
        return replace(base, **overrides)

    @property
    def output_dim(self) -> int:
        return self.blocks * self.model_dim if self.aggregation == "concat" else self.model_dim


class VGGSubsampler(Module):
    """Two (conv3x3-ReLU-conv3x3-ReLU-maxpool2x2) stages, then frequency folded into d channels."""

    def __init__(self, n_mels: int, channels: Sequence[int], model_dim: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        c1, c2 = channels
        self.conv1a = Conv2d(1, c1, 3, padding=1, rng=rng)
        self.conv1b = Conv2d(c1, c1, 3, padding=1, rng=rng)
        self.conv2a = Conv2d(c1, c2, 3, padding=1, rng=rng)
        self.conv2b = Conv2d(c2, c2, 3, padding=1, rng=rng)
        half = -(-n_mels // 2)
        reduced = -(-half // 2)
        self.channels = c2
        self.proj = Linear(c2 * reduced, model_dim, rng=rng)

    def forward(self, feats: Tensor) -> Tensor:
        """(batch, T, F) -> (batch, ceil(T/4), model_dim)."""
        if feats.ndim != 3:
            raise ShapeMismatchError(f"VGG front-end expects (batch, T, F), got {feats.shape}")
        batch, steps, bins = feats.shape
        if steps < 4:
            raise ShapeMismatchError(f"VGG front-end needs T >= 4 frames, got T={steps}")
        x = feats.reshape(batch, 1, steps, bins)
        x = F.max_pool2x2(F.relu(self.conv1b(F.relu(self.conv1a(x)))))
        x = F.max_pool2x2(F.relu(self.conv2b(F.relu(self.conv2a(x)))))
        _, channels, out_steps, out_bins = x.shape
        x = x.transpose(0, 2, 1, 3).reshape(batch, out_steps, channels * out_bins)
        return self.proj(x)


class LEConformerBlock(Module):
    """
    z~  = z + FFN(z) / 2
    z'  = z~ + MSA(LN(z~))
    z'' = z' + Conv(z')
    out = LN(z'' + FFN(z'') / 2)
    """

    def __init__(self, cfg: LEConformerConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        ffn_args = dict(
            enable_dwconv=cfg.enable_dwconv,
            enable_se=cfg.enable_se,
            kernel_size=cfg.ffn_kernel,
            se_reduction=cfg.se_reduction,
            rng=rng,
        )
        self.ffn1 = LEFeedForward(cfg.model_dim, cfg.ffn_hidden, **ffn_args)
        self.attn_norm = LayerNorm(cfg.model_dim)
        self.attn = MultiHeadSelfAttention(MSAConfig(cfg.model_dim, cfg.heads, cfg.relative_position), rng=rng)
        self.conv = ConvolutionModule(cfg.model_dim, cfg.conv_kernel, rng=rng)
        self.ffn2 = LEFeedForward(cfg.model_dim, cfg.ffn_hidden, **ffn_args)
        self.final_norm = LayerNorm(cfg.model_dim)
        self.dropout = Dropout(cfg.dropout, rng=rng)

    def forward(self, z: Tensor) -> Tensor:
        z = z + self.dropout(self.ffn1(z)) * 0.5
        z = z + self.dropout(self.attn(self.attn_norm(z)))
        z = z + self.dropout(self.conv(z))
        return self.final_norm(z + self.dropout(self.ffn2(z)) * 0.5)


def aggregate_blocks(outputs: Sequence[Tensor], mode: str, weights: Optional[Tensor] = None) -> Tensor:
    """
    Combine the N block outputs, each (batch, T', d).

    Args:
        outputs: Block outputs in block order
        mode: concat (N*d channels), weighted_avg (softmax(weights) convex mix) or last_only
        weights: N learnable logits, required for weighted_avg

    Returns:
        (batch, T', D_agg)
    """
    if not outputs:
        raise ShapeMismatchError("aggregate_blocks needs at least one block output")
    reference = outputs[0].shape
    for i, out in enumerate(outputs):
        if out.shape != reference:
            raise ShapeMismatchError(f"block output {i} has shape {out.shape}, expected {reference}")

    if mode == "concat":
        return outputs[0] if len(outputs) == 1 else F.concat(outputs, axis=-1)
    if mode == "last_only":
        return outputs[-1]
    if mode == "weighted_avg":
        if weights is None or weights.shape != (len(outputs),):
            raise ShapeMismatchError(f"weighted_avg needs {len(outputs)} weights")
        mix = F.softmax(weights, axis=0)
        stacked = F.concat([out.reshape((1,) + reference) for out in outputs], axis=0)
        return (stacked * mix.reshape(len(outputs), 1, 1, 1)).sum(axis=0)
    raise ShapeMismatchError(f"unknown aggregation mode {mode!r}")


class LEConformer(Module):
    """Frame-level encoder: (batch, T, 80) features -> (batch, T/4, D_agg)."""

    def __init__(self, cfg: LEConformerConfig, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng(seed)
        self.config = cfg
        self.frontend = VGGSubsampler(cfg.n_mels, cfg.vgg_channels, cfg.model_dim, rng=rng)
        self.blocks = ModuleList([LEConformerBlock(cfg, rng=rng) for _ in range(cfg.blocks)])
        if cfg.aggregation == "weighted_avg":
            self.aggregation_weights = Parameter(np.zeros(cfg.blocks), dtype=DEFAULT_DTYPE)

    @property
    def output_dim(self) -> int:
        return self.config.output_dim

    def block_outputs(self, feats: Tensor) -> List[Tensor]:
        z = self.frontend(feats)
        outputs = []
        for block in self.blocks:
            z = block(z)
            outputs.append(z)
        return outputs

    def forward(self, feats: Tensor) -> Tensor:
        weights = getattr(self, "aggregation_weights", None)
        return aggregate_blocks(self.block_outputs(feats), self.config.aggregation, weights)


def main():
    """Walk the full-scale shape pipeline on a 2 s segment."""
    cfg = LEConformerConfig.toy()
    model = LEConformer(cfg).eval()
    feats = Tensor(np.random.default_rng(0).standard_normal((2, 200, 80)), dtype=np.float32)
    out = model(feats)
    print(f"LE-Conformer (toy): {model.num_parameters():,} parameters")
    print(f"Input {feats.shape} -> frames {out.shape}")
    full = LEConformerConfig.full()
    print(f"Full scale: 200 x 80 -> 50 x {full.model_dim} per block -> 50 x {full.output_dim} aggregated")


if __name__ == "__main__":
    main()

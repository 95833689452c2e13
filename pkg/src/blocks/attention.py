"""
Multi-head self-attention with optional positional terms.

Position modes:
    none           plain scaled dot-product attention
    conformer_rel  relative sinusoidal encoding with learned content/position
                   biases, shifted into place per query
    window_bias    learned bias table indexed by 2-D coordinate offsets
                   inside an M x M window (sequence length must be M*M)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..errors import ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F
from .layers import DEFAULT_DTYPE, Linear, Module, Parameter

logger = logging.getLogger(__name__)

POSITION_MODES = ("conformer_rel", "window_bias", "none")


@dataclass(frozen=True)
class MSAConfig:
    model_dim: int
    heads: int
    relative_position: str = "none"
    window: int = 0

    def __post_init__(self):
        if self.model_dim % self.heads != 0:
            raise ShapeMismatchError(f"model_dim {self.model_dim} is not divisible by heads {self.heads}")
        if self.relative_position not in POSITION_MODES:
            raise ShapeMismatchError(f"relative_position must be one of {POSITION_MODES}, got {self.relative_position!r}")
        if self.relative_position == "window_bias" and self.window < 1:
            raise ShapeMismatchError("window_bias attention needs a window size >= 1")

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads


def relative_sinusoids(length: int, dim: int, dtype=np.float64) -> np.ndarray:
    """
    Sinusoidal encodings for relative distances length-1, ..., -(length-1).

    Returns:
        (2 * length - 1, dim) array; row r encodes distance length-1-r
    """
    distances = np.arange(length - 1, -length, -1, dtype=np.float64)[:, None]
    inv_freq = 1.0 / (10000.0 ** (np.arange(0, dim, 2, dtype=np.float64) / dim))
    table = np.zeros((2 * length - 1, dim))
    table[:, 0::2] = np.sin(distances * inv_freq)
    table[:, 1::2] = np.cos(distances * inv_freq[: dim // 2])
    return table.astype(dtype)


def relative_shift_index(length: int) -> np.ndarray:
    """index[i, j] = length-1-i+j selects distance i-j from the sinusoid table rows."""
    rows = np.arange(length)[:, None]
    cols = np.arange(length)[None, :]
    return length - 1 - rows + cols


def window_position_index(window: int) -> np.ndarray:
    """(M*M, M*M) index into the (2M-1)^2 offset table for raster-ordered window tokens."""
    coords = np.stack(np.meshgrid(np.arange(window), np.arange(window), indexing="ij")).reshape(2, -1)
    offsets = coords[:, :, None] - coords[:, None, :] + (window - 1)
    return offsets[0] * (2 * window - 1) + offsets[1]


class MultiHeadSelfAttention(Module):
    """Scaled dot-product self-attention over (batch, tokens, model_dim)."""

    def __init__(self, config: MSAConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        d, h = config.model_dim, config.heads
        self.config = config
        self.query = Linear(d, d, rng=rng)
        self.key = Linear(d, d, rng=rng)
        self.value = Linear(d, d, rng=rng)
        if config.relative_position == "conformer_rel":
            self.linear_pos = Linear(d, d, bias=False, rng=rng)
            self.pos_bias_u = Parameter(np.zeros((h, 1, config.head_dim)), dtype=DEFAULT_DTYPE)
            self.pos_bias_v = Parameter(np.zeros((h, 1, config.head_dim)), dtype=DEFAULT_DTYPE)
        elif config.relative_position == "window_bias":
            size = (2 * config.window - 1) ** 2
            self.position_bias = Parameter(rng.normal(0.0, 0.02, (size, h)), dtype=DEFAULT_DTYPE)
        self.output = Linear(d, d, rng=rng)

    def _split_heads(self, x: Tensor) -> Tensor:
        batch, tokens, _ = x.shape
        cfg = self.config
        return x.reshape(batch, tokens, cfg.heads, cfg.head_dim).transpose(0, 2, 1, 3)

    def _scores(self, q: Tensor, k: Tensor, tokens: int) -> Tensor:
        """Scaled logits; the window bias is added after scaling."""
        cfg = self.config
        scale = 1.0 / np.sqrt(cfg.head_dim)
        k_t = k.transpose(0, 1, 3, 2)
        if cfg.relative_position == "conformer_rel":
            table = Tensor(relative_sinusoids(tokens, cfg.model_dim, dtype=q.dtype))
            pos = self.linear_pos(table).reshape(2 * tokens - 1, cfg.heads, cfg.head_dim).transpose(1, 2, 0)
            content = (q + self.pos_bias_u) @ k_t
            position = F.take_along_last((q + self.pos_bias_v) @ pos, relative_shift_index(tokens))
            return (content + position) * scale
        scores = (q @ k_t) * scale
        if cfg.relative_position == "window_bias":
            if tokens != cfg.window * cfg.window:
                raise ShapeMismatchError(f"window_bias attention expects {cfg.window ** 2} tokens, got {tokens}")
            bias = F.gather(self.position_bias, window_position_index(cfg.window)).transpose(2, 0, 1)
            scores = scores + bias
        return scores

    def forward(
        self, x: Tensor, mask: Optional[np.ndarray] = None, return_attention: bool = False
    ) -> Union[Tensor, Tuple[Tensor, Tensor]]:
        """
        Args:
            x: (batch, tokens, model_dim)
            mask: Optional additive bias broadcastable to (batch, heads, tokens, tokens);
                -inf forbids a query/key pair
            return_attention: Also return the (batch, heads, tokens, tokens) probabilities

        Returns:
            (batch, tokens, model_dim) output, and the probabilities when requested
        """
        if x.ndim != 3 or x.shape[-1] != self.config.model_dim:
            raise ShapeMismatchError(f"MSA expects (batch, tokens, {self.config.model_dim}), got {x.shape}")
        batch, tokens, _ = x.shape
        q = self._split_heads(self.query(x))
        k = self._split_heads(self.key(x))
        v = self._split_heads(self.value(x))

        scores = self._scores(q, k, tokens)
        if mask is not None:
            scores = F.attention_bias(scores, mask)
        probs = F.softmax(scores, axis=-1)
        context = (probs @ v).transpose(0, 2, 1, 3).reshape(batch, tokens, self.config.model_dim)
        out = self.output(context)
        return (out, probs) if return_attention else out

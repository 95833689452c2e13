"""
Feed-forward blocks: squeeze-and-excitation gating, the locality-enhanced
FFN used inside LE-Conformer blocks, and the GELU MLP of the Swin blocks.
"""

import logging
from typing import Optional

import numpy as np

from ..errors import ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F
from .layers import DepthwiseConv1d, LayerNorm, Linear, Module

logger = logging.getLogger(__name__)

SE_REDUCTION = 16
FFN_KERNEL = 3


class SEBlock(Module):
    """Channel gates sigmoid(W2 ReLU(W1 mean_t(x))) applied to (batch, time, channels)."""

    def __init__(self, channels: int, reduction: int = SE_REDUCTION, rng: Optional[np.random.Generator] = None):
        super().__init__()
        if channels % reduction != 0:
            raise ShapeMismatchError(f"SE channels {channels} not divisible by reduction {reduction}")
        self.channels = channels
        self.fc1 = Linear(channels, channels // reduction, rng=rng)
        self.fc2 = Linear(channels // reduction, channels, rng=rng)

    def gates(self, x: Tensor) -> Tensor:
        """(batch, channels) excitation values in (0, 1)."""
        squeeze = x.mean(axis=1)
        return F.sigmoid(self.fc2(F.relu(self.fc1(squeeze))))

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.channels:
            raise ShapeMismatchError(f"SE block expects {self.channels} channels on axis -1, got {x.shape[-1]}")
        g = self.gates(x)
        return x * g.reshape(x.shape[0], 1, self.channels)


class LEFeedForward(Module):
    """
    LayerNorm -> Linear(d->h) -> LayerNorm -> [DWConv] -> [SE] -> Swish -> Linear(h->d).

    Disabled stages are not constructed, so ablated models carry no
    parameters for them.
    """

    def __init__(
        self,
        model_dim: int,
        hidden_dim: int,
        enable_dwconv: bool = True,
        enable_se: bool = True,
        kernel_size: int = FFN_KERNEL,
        se_reduction: int = SE_REDUCTION,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        self.norm_in = LayerNorm(model_dim)
        self.fc1 = Linear(model_dim, hidden_dim, rng=rng)
        self.norm_hidden = LayerNorm(hidden_dim)
        self.dwconv = DepthwiseConv1d(hidden_dim, kernel_size, rng=rng) if enable_dwconv else None
        self.se = SEBlock(hidden_dim, se_reduction, rng=rng) if enable_se else None
        self.fc2 = Linear(hidden_dim, model_dim, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        h = self.norm_hidden(self.fc1(self.norm_in(x)))
        if self.dwconv is not None:
            h = self.dwconv(h)
        if self.se is not None:
            h = self.se(h)
        return self.fc2(F.swish(h))


class MLP(Module):
    """Two-layer GELU MLP."""

    def __init__(self, dim: int, hidden_dim: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.fc1 = Linear(dim, hidden_dim, rng=rng)
        self.fc2 = Linear(hidden_dim, dim, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(F.gelu(self.fc1(x)))

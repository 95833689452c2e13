"""Conformer convolution module."""

import logging
from typing import Optional

import numpy as np

from ..tensor import Tensor
from ..tensor import functional as F
from .layers import BatchNorm, DepthwiseConv1d, LayerNorm, Linear, Module

logger = logging.getLogger(__name__)


class ConvolutionModule(Module):
    """LayerNorm -> pointwise d->2d -> GLU -> depth-wise conv -> BatchNorm -> Swish -> pointwise d->d."""

    def __init__(self, model_dim: int, kernel_size: int = 15, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.norm = LayerNorm(model_dim)
        self.pointwise_in = Linear(model_dim, 2 * model_dim, rng=rng)
        self.depthwise = DepthwiseConv1d(model_dim, kernel_size, rng=rng)
        self.batch_norm = BatchNorm(model_dim)
        self.pointwise_out = Linear(model_dim, model_dim, rng=rng)

    def forward(self, x: Tensor) -> Tensor:
        h = F.glu(self.pointwise_in(self.norm(x)), axis=-1)
        h = F.swish(self.batch_norm(self.depthwise(h)))
        return self.pointwise_out(h)

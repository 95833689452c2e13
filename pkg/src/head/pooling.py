"""Attentive statistics pooling and the embedding projection."""

import logging
from typing import Optional

import numpy as np

from ..blocks.layers import Linear, Module
from ..errors import ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F

logger = logging.getLogger(__name__)

ASP_BOTTLENECK = 128
VARIANCE_FLOOR = 1e-9
EMBEDDING_DIM = 256


class AttentiveStatsPooling(Module):
    """
    Attention-weighted mean and standard deviation over frames.

    e_t = v . tanh(W h_t + b), alpha = softmax_t(e)
    mu = sum_t alpha_t h_t, sigma = sqrt(max(sum_t alpha_t h_t^2 - mu^2, eps))
    """

    def __init__(
        self,
        input_dim: int,
        bottleneck: int = ASP_BOTTLENECK,
        eps: float = VARIANCE_FLOOR,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        self.input_dim, self.eps = input_dim, eps
        self.attention = Linear(input_dim, bottleneck, rng=rng)
        self.score = Linear(bottleneck, 1, bias=False, rng=rng)

    @property
    def output_dim(self) -> int:
        return 2 * self.input_dim

    def weights(self, frames: Tensor) -> Tensor:
        """(batch, T) attention weights, each row summing to 1."""
        batch, steps, _ = frames.shape
        energies = self.score(F.tanh(self.attention(frames))).reshape(batch, steps)
        return F.softmax(energies, axis=1)

    def forward(self, frames: Tensor) -> Tensor:
        """(batch, T, D) -> (batch, 2D) = [mu, sigma]."""
        if frames.ndim != 3 or frames.shape[-1] != self.input_dim:
            raise ShapeMismatchError(f"ASP expects (batch, T, {self.input_dim}), got {frames.shape}")
        if frames.shape[1] < 1:
            raise ShapeMismatchError("ASP needs at least one frame")
        batch, steps, _ = frames.shape
        alpha = self.weights(frames).reshape(batch, steps, 1)
        mu = (alpha * frames).sum(axis=1)
        second = (alpha * frames * frames).sum(axis=1)
        sigma = F.sqrt(F.clamp_min(second - mu * mu, self.eps))
        return F.concat([mu, sigma], axis=-1)


class EmbeddingProjection(Linear):
    """Affine map from the pooled statistics to the speaker embedding."""

    def __init__(self, input_dim: int, embedding_dim: int = EMBEDDING_DIM, rng: Optional[np.random.Generator] = None):
        super().__init__(input_dim, embedding_dim, rng=rng)

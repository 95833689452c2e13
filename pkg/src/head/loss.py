"""Additive-margin softmax over cosine logits."""

import logging
from typing import Optional

import numpy as np

from ..blocks.layers import DEFAULT_DTYPE, Module, Parameter
from ..errors import ConfigValidationError, LabelError, ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F

logger = logging.getLogger(__name__)

MARGIN = 0.2
SCALE = 30.0


class AMSoftmaxLoss(Module):
    """
    loss = mean_b -log( e^{s(cos_y - m)} / (e^{s(cos_y - m)} + sum_{j != y} e^{s cos_j}) )

    Both embeddings and class weights are length-normalised, so the loss
    only sees angles.
    """

    def __init__(
        self,
        embedding_dim: int,
        num_classes: int,
        margin: float = MARGIN,
        scale: float = SCALE,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        if margin < 0 or scale <= 0:
            raise ConfigValidationError(f"AM-softmax needs margin >= 0 and scale > 0, got m={margin}, s={scale}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.margin, self.scale = margin, scale
        self.num_classes = num_classes
        self.weight = Parameter(rng.standard_normal((num_classes, embedding_dim)) * 0.01, dtype=DEFAULT_DTYPE)

    def cosine(self, embeddings: Tensor) -> Tensor:
        """(batch, classes) cosine similarity to every class weight."""
        return F.l2_normalize(embeddings, axis=-1) @ F.l2_normalize(self.weight, axis=-1).transpose()

    def logits(self, embeddings: Tensor, labels: np.ndarray) -> Tensor:
        cos = self.cosine(embeddings)
        margin = np.zeros(cos.shape, dtype=cos.dtype)
        margin[np.arange(cos.shape[0]), labels] = self.margin
        return (cos - margin) * self.scale

    def forward(self, embeddings: Tensor, labels) -> Tensor:
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if embeddings.ndim != 2 or embeddings.shape[0] == 0:
            raise ShapeMismatchError(f"AM-softmax expects a non-empty (batch, dim) batch, got {embeddings.shape}")
        if labels.shape[0] != embeddings.shape[0]:
            raise ShapeMismatchError(f"{labels.shape[0]} labels for a batch of {embeddings.shape[0]}")
        bad = labels[(labels < 0) | (labels >= self.num_classes)]
        if bad.size:
            raise LabelError(f"label {int(bad[0])} out of range for {self.num_classes} classes")
        return F.cross_entropy(self.logits(embeddings, labels), labels)

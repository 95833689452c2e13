"""AdamW with decoupled weight decay and the warm-up learning-rate schedules."""

import logging
from typing import Dict, List, Sequence

import numpy as np

from ..blocks.layers import Parameter

logger = logging.getLogger(__name__)


def learning_rate(
    step: int,
    peak: float,
    warmup_steps: int,
    schedule: str = "linear_warmup_cyclic",
    min_lr: float = 0.0,
    cycle_steps: int = 10000,
) -> float:
    """
    Learning rate for a 1-based optimiser step.

    Warm-up ramps linearly peak * step / warmup_steps. Afterwards the rate
    stays at `peak` (linear_warmup_constant) or cycles triangularly
    peak -> min_lr -> peak with period `cycle_steps` (linear_warmup_cyclic).
    """
    if warmup_steps > 0 and step < warmup_steps:
        return peak * step / warmup_steps
    if schedule == "linear_warmup_constant":
        return peak
    if schedule != "linear_warmup_cyclic":
        raise ValueError(f"unknown schedule {schedule!r}")
    phase = ((step - warmup_steps) % cycle_steps) / cycle_steps
    distance = 1.0 - abs(2.0 * phase - 1.0)
    return peak - (peak - min_lr) * distance


class AdamW:
    """
    Adam with decoupled weight decay.

    Decay applies to matrices and higher-rank weights only; biases, norm
    affines and 1-D scalars are not decayed.
    """

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 3e-4,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 5e-2,
    ):
        self.params: List[Parameter] = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.m: Dict[int, np.ndarray] = {id(p): np.zeros_like(p.data) for p in self.params}
        self.v: Dict[int, np.ndarray] = {id(p): np.zeros_like(p.data) for p in self.params}

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self, lr: float = None) -> None:
        lr = self.lr if lr is None else lr
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1 ** t
        bias2 = 1.0 - self.beta2 ** t
        for p in self.params:
            if p.grad is None:
                continue
            m, v = self.m[id(p)], self.v[id(p)]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            if self.weight_decay and p.ndim >= 2:
                p.data *= 1.0 - lr * self.weight_decay
            p.data -= (lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)).astype(p.dtype)

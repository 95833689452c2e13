"""
Module base class and the basic parameterised layers.

A Module discovers its parameters, buffers and sub-modules from its
attributes in assignment order, which fixes the dotted parameter names used
by checkpoints (e.g. ``blocks.0.ffn1.fc1.weight``).
"""

import logging
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import CheckpointMismatchError, ShapeMismatchError
from ..tensor import Tensor
from ..tensor import functional as F

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float32


class Parameter(Tensor):
    """Leaf tensor that always requires gradients and is registered by its Module."""

    def __init__(self, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)


class Module:
    """Base class for layers: parameter registry, buffers and train/eval mode."""

    def __init__(self):
        self.training = True
        self._buffer_names: List[str] = []

    def forward(self, *args, **kwargs):
        raise NotImplementedError(f"{type(self).__name__} has no forward()")

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    # ------------------------------------------------------------------
    # Registry
    # ------------------------------------------------------------------
    def register_buffer(self, name: str, value: np.ndarray) -> None:
        """Non-trainable state (e.g. batch-norm running statistics) saved with the parameters."""
        if name not in self._buffer_names:
            self._buffer_names.append(name)
        setattr(self, name, value)

    def named_children(self) -> Iterator[Tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix + name + ".")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name in self._buffer_names:
            yield prefix + name, getattr(self, name)
        for child_name, child in self.named_children():
            yield from child.named_buffers(prefix + child_name + ".")

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        """Parameters then buffers, as copies keyed by dotted name."""
        state = OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())
        for name, buffer in self.named_buffers():
            state[name] = np.array(buffer, copy=True)
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy values into the existing parameters and buffers.

        Raises:
            CheckpointMismatchError: if names or shapes differ from the registry
        """
        params = dict(self.named_parameters())
        buffers = dict(self.named_buffers())
        expected = set(params) | set(buffers)
        missing = sorted(expected - set(state))
        unexpected = sorted(set(state) - expected)
        if missing or unexpected:
            raise CheckpointMismatchError(
                f"State does not match model registry: missing {missing[:5]}, unexpected {unexpected[:5]}"
            )
        for name, value in state.items():
            target = params[name].data if name in params else buffers[name]
            value = np.asarray(value)
            if value.shape != target.shape:
                raise CheckpointMismatchError(f"{name}: shape {value.shape} != model shape {target.shape}")
            target[...] = value

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    # ------------------------------------------------------------------
    # Mode and precision
    # ------------------------------------------------------------------
    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for _, child in self.named_children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def to(self, dtype) -> "Module":
        """Cast every parameter and buffer in place (float64 for gradient checks)."""
        dtype = np.dtype(dtype)
        for p in self.parameters():
            p.data = np.asarray(p.data, dtype=dtype, order="C")
            p.grad = None
        self._cast_buffers(dtype)
        return self

    def _cast_buffers(self, dtype: np.dtype) -> None:
        for name in self._buffer_names:
            setattr(self, name, np.asarray(getattr(self, name), dtype=dtype).copy())
        for _, child in self.named_children():
            child._cast_buffers(dtype)  # pylint: disable=protected-access

    @property
    def dtype(self) -> np.dtype:
        params = self.parameters()
        return params[0].dtype if params else np.dtype(DEFAULT_DTYPE)


class ModuleList(Module):
    """Ordered container; children are named by their index."""

    def __init__(self, modules: Sequence[Module] = ()):
        super().__init__()
        self._items: List[Module] = list(modules)

    def named_children(self) -> Iterator[Tuple[str, Module]]:
        for i, module in enumerate(self._items):
            yield str(i), module

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, module in self.named_children():
            yield from module.named_parameters(prefix + name + ".")

    def append(self, module: Module) -> None:
        self._items.append(module)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]

    def __iter__(self) -> Iterator[Module]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)


def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(0)


class Linear(Module):
    """y = x @ W + b, with W stored as (in_features, out_features)."""

    def __init__(self, in_features: int, out_features: int, bias: bool = True, rng: Optional[np.random.Generator] = None):
        super().__init__()
        bound = 1.0 / np.sqrt(in_features)
        self.in_features, self.out_features = in_features, out_features
        self.weight = Parameter(_rng(rng).uniform(-bound, bound, (in_features, out_features)), dtype=DEFAULT_DTYPE)
        self.bias = Parameter(np.zeros(out_features), dtype=DEFAULT_DTYPE) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.in_features:
            raise ShapeMismatchError(
                f"Linear: input axis -1 has {x.shape[-1]} features, expected {self.in_features}"
            )
        return F.linear(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.weight = Parameter(np.ones(channels), dtype=DEFAULT_DTYPE)
        self.bias = Parameter(np.zeros(channels), dtype=DEFAULT_DTYPE)

    def forward(self, x: Tensor) -> Tensor:
        return F.layer_norm(x, self.weight, self.bias, eps=self.eps)


class BatchNorm(Module):
    """Batch normalisation over all axes but the trailing channel axis."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum, self.eps = momentum, eps
        self.weight = Parameter(np.ones(channels), dtype=DEFAULT_DTYPE)
        self.bias = Parameter(np.zeros(channels), dtype=DEFAULT_DTYPE)
        self.register_buffer("running_mean", np.zeros(channels, dtype=DEFAULT_DTYPE))
        self.register_buffer("running_var", np.ones(channels, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return F.batch_norm(
            x,
            self.weight,
            self.bias,
            self.running_mean,
            self.running_var,
            training=self.training,
            momentum=self.momentum,
            eps=self.eps,
        )


class DepthwiseConv1d(Module):
    """Per-channel temporal convolution on (batch, time, channels), same-length output."""

    def __init__(self, channels: int, kernel_size: int, rng: Optional[np.random.Generator] = None):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ShapeMismatchError(f"Depth-wise kernel size must be odd, got {kernel_size}")
        bound = 1.0 / np.sqrt(kernel_size)
        self.kernel_size = kernel_size
        self.weight = Parameter(_rng(rng).uniform(-bound, bound, (channels, kernel_size)), dtype=DEFAULT_DTYPE)
        self.bias = Parameter(np.zeros(channels), dtype=DEFAULT_DTYPE)

    def forward(self, x: Tensor) -> Tensor:
        return F.depthwise_conv1d(x, self.weight, self.bias)


class Conv2d(Module):
    """2-D convolution on (batch, channels, height, width)."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: Union[int, Tuple[int, int]] = 1,
        padding: Union[int, Tuple[int, int]] = 0,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        bound = 1.0 / np.sqrt(in_channels * kernel_size * kernel_size)
        self.stride, self.padding = stride, padding
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.weight = Parameter(_rng(rng).uniform(-bound, bound, shape), dtype=DEFAULT_DTYPE)
        self.bias = Parameter(np.zeros(out_channels), dtype=DEFAULT_DTYPE)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class Dropout(Module):
    def __init__(self, p: float = 0.0, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.p = p
        self.rng = _rng(rng)

    def forward(self, x: Tensor) -> Tensor:
        return F.dropout(x, self.p, training=self.training, rng=self.rng)

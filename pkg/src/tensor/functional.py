"""
Forward kernels and their analytic gradients.

Each kernel is a Function subclass with a lowercase wrapper. Broadcast
gradients are reduced by the tape, so element-wise backward passes may
return gradients in the broadcast shape.
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import ShapeMismatchError
from .tensor import Function, Tensor

logger = logging.getLogger(__name__)

Axis = Optional[Union[int, Tuple[int, ...]]]

GELU_COEF = np.sqrt(2.0 / np.pi)


def _broadcast_shape(name: str, a: np.ndarray, b: np.ndarray) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeMismatchError(f"{name}: cannot broadcast {a.shape} with {b.shape}") from exc


def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def _expand_reduced(grad: np.ndarray, axes: Tuple[int, ...], keepdims: bool) -> np.ndarray:
    if keepdims:
        return grad
    for axis in axes:
        grad = np.expand_dims(grad, axis)
    return grad


# ----------------------------------------------------------------------
# Element-wise arithmetic
# ----------------------------------------------------------------------
class Add(Function):
    def forward(self, a, b):
        _broadcast_shape("add", a, b)
        return a + b

    def backward(self, grad):
        return grad, grad


class Sub(Function):
    def forward(self, a, b):
        _broadcast_shape("sub", a, b)
        return a - b

    def backward(self, grad):
        return grad, -grad


class Mul(Function):
    def forward(self, a, b):
        _broadcast_shape("mul", a, b)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Div(Function):
    def forward(self, a, b):
        _broadcast_shape("div", a, b)
        self.a, self.b = a, b
        return a / b

    def backward(self, grad):
        return grad / self.b, -grad * self.a / (self.b * self.b)


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class MatMul(Function):
    def forward(self, a, b):
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeMismatchError(f"matmul: operands need >= 2 axes, got {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise ShapeMismatchError(
                f"matmul: axis -1 of {a.shape} ({a.shape[-1]}) != axis -2 of {b.shape} ({b.shape[-2]})"
            )
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad):
        a, b = self.a, self.b
        grad_a = np.matmul(grad, np.swapaxes(b, -1, -2))
        if b.ndim == 2 and a.ndim > 2:
            grad_b = a.reshape(-1, a.shape[-1]).T @ grad.reshape(-1, grad.shape[-1])
        else:
            grad_b = np.matmul(np.swapaxes(a, -1, -2), grad)
        return grad_a, grad_b


class AttentionBias(Function):
    """Add a constant (possibly -inf) mask to attention logits."""

    def forward(self, scores, mask: np.ndarray):
        _broadcast_shape("attention_bias", scores, mask)
        return scores + mask

    def backward(self, grad):
        return (grad,)


# ----------------------------------------------------------------------
# Activations and point-wise maths
# ----------------------------------------------------------------------
class ReLU(Function):
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad):
        return (grad * self.mask,)


class Sigmoid(Function):
    def forward(self, x):
        self.out = expit(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Swish(Function):
    def forward(self, x):
        self.x = x
        self.sig = expit(x)
        return x * self.sig

    def backward(self, grad):
        return (grad * self.sig * (1.0 + self.x * (1.0 - self.sig)),)


class Tanh(Function):
    def forward(self, x):
        self.out = np.tanh(x)
        return self.out

    def backward(self, grad):
        return (grad * (1.0 - self.out * self.out),)


class GELU(Function):
    """Tanh approximation of the Gaussian error linear unit."""

    def forward(self, x):
        self.x = x
        self.t = np.tanh(GELU_COEF * (x + 0.044715 * x ** 3))
        return 0.5 * x * (1.0 + self.t)

    def backward(self, grad):
        x, t = self.x, self.t
        du = GELU_COEF * (1.0 + 3 * 0.044715 * x * x)
        return (grad * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du),)


class GLU(Function):
    def forward(self, x, axis: int = -1):
        self.axis = axis % x.ndim
        if x.shape[self.axis] % 2:
            raise ShapeMismatchError(f"glu: axis {axis} has odd extent {x.shape[self.axis]}")
        self.a, b = np.split(x, 2, axis=self.axis)
        self.gate = expit(b)
        return self.a * self.gate

    def backward(self, grad):
        grad_a = grad * self.gate
        grad_b = grad * self.a * self.gate * (1.0 - self.gate)
        return (np.concatenate([grad_a, grad_b], axis=self.axis),)


class Exp(Function):
    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Sqrt(Function):
    def forward(self, x):
        self.out = np.sqrt(x)
        return self.out

    def backward(self, grad):
        return (grad * 0.5 / self.out,)


class ClampMin(Function):
    def forward(self, x, minimum: float = 0.0):
        self.mask = x > minimum
        return np.where(self.mask, x, minimum)

    def backward(self, grad):
        return (grad * self.mask,)


class Dropout(Function):
    def forward(self, x, p: float = 0.0, rng: Optional[np.random.Generator] = None):
        rng = rng or np.random.default_rng()
        self.mask = (rng.random(x.shape) >= p).astype(x.dtype) / (1.0 - p)
        return x * self.mask

    def backward(self, grad):
        return (grad * self.mask,)


# ----------------------------------------------------------------------
# Normalisation
# ----------------------------------------------------------------------
class Softmax(Function):
    """Softmax along one axis; rows that are entirely -inf map to zeros."""

    def forward(self, x, axis: int = -1):
        self.axis = axis
        peak = np.max(x, axis=axis, keepdims=True)
        peak = np.where(np.isfinite(peak), peak, 0.0)
        e = np.exp(x - peak)
        total = np.sum(e, axis=axis, keepdims=True)
        self.out = np.divide(e, total, out=np.zeros_like(e), where=total > 0)
        return self.out

    def backward(self, grad):
        s = self.out
        return (s * (grad - np.sum(grad * s, axis=self.axis, keepdims=True)),)


def _normalize_backward(grad_xhat, xhat, rstd, axes):
    count = int(np.prod([grad_xhat.shape[a] for a in axes]))
    sum_g = np.sum(grad_xhat, axis=axes, keepdims=True)
    sum_gx = np.sum(grad_xhat * xhat, axis=axes, keepdims=True)
    return rstd * (grad_xhat - sum_g / count - xhat * sum_gx / count)


class LayerNorm(Function):
    """Normalise over the last axis, then apply a per-channel affine map."""

    def forward(self, x, gamma, beta, eps: float = 1e-5):
        channels = x.shape[-1]
        if gamma.shape != (channels,) or beta.shape != (channels,):
            raise ShapeMismatchError(
                f"layer_norm: affine shapes {gamma.shape}/{beta.shape} do not match axis -1 ({channels})"
            )
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self.rstd = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mu) * self.rstd
        self.gamma = gamma
        return self.xhat * gamma + beta

    def backward(self, grad):
        grad_x = _normalize_backward(grad * self.gamma, self.xhat, self.rstd, (grad.ndim - 1,))
        return grad_x, grad * self.xhat, grad


class BatchNormTrain(Function):
    """Normalise each channel (last axis) with statistics of the current batch."""

    def forward(self, x, gamma, beta, eps: float = 1e-5):
        channels = x.shape[-1]
        if gamma.shape != (channels,) or beta.shape != (channels,):
            raise ShapeMismatchError(
                f"batch_norm: affine shapes {gamma.shape}/{beta.shape} do not match axis -1 ({channels})"
            )
        self.axes = tuple(range(x.ndim - 1))
        mu = x.mean(axis=self.axes, keepdims=True)
        var = x.var(axis=self.axes, keepdims=True)
        self.rstd = 1.0 / np.sqrt(var + eps)
        self.xhat = (x - mu) * self.rstd
        self.gamma = gamma
        return self.xhat * gamma + beta

    def backward(self, grad):
        grad_x = _normalize_backward(grad * self.gamma, self.xhat, self.rstd, self.axes)
        return grad_x, grad * self.xhat, grad


class BatchNormEval(Function):
    """Normalise each channel with stored running statistics."""

    def forward(self, x, gamma, beta, running_mean=None, running_var=None, eps: float = 1e-5):
        self.rstd = 1.0 / np.sqrt(running_var + eps)
        self.xhat = (x - running_mean) * self.rstd
        self.gamma = gamma
        return self.xhat * gamma + beta

    def backward(self, grad):
        return grad * self.gamma * self.rstd, grad * self.xhat, grad


class L2Normalize(Function):
    def forward(self, x, axis: int = -1, eps: float = 1e-12):
        self.axis = axis
        norm = np.sqrt(np.sum(x * x, axis=axis, keepdims=True))
        self.norm = np.maximum(norm, eps)
        self.clamped = norm <= eps
        self.out = x / self.norm
        return self.out

    def backward(self, grad):
        radial = self.out * np.sum(grad * self.out, axis=self.axis, keepdims=True)
        grad_x = np.where(self.clamped, grad, grad - radial) / self.norm
        return (grad_x,)


class MarginCrossEntropy(Function):
    """
    Mean softmax cross-entropy of integer labels against logits.

    The loss of each row is evaluated as max_j(z_j - z_y) plus the log1p of
    the remaining shifted exponentials, which keeps tiny losses exact.
    """

    def forward(self, logits, labels: np.ndarray = None):
        batch, classes = logits.shape
        labels = np.asarray(labels)
        if labels.shape != (batch,):
            raise ShapeMismatchError(f"cross_entropy: labels {labels.shape} vs logits {logits.shape}")
        rows = np.arange(batch)
        shifted = logits - logits[rows, labels][:, None]
        peak = shifted.max(axis=1)
        e = np.exp(shifted - peak[:, None])
        e[rows, shifted.argmax(axis=1)] = 0.0
        losses = peak + np.log1p(e.sum(axis=1))

        z = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        p[rows, labels] -= 1.0
        self.grad_logits = p / batch
        return np.asarray(losses.mean())

    def backward(self, grad):
        return (grad * self.grad_logits,)


# ----------------------------------------------------------------------
# Reductions
# ----------------------------------------------------------------------
class Sum(Function):
    def forward(self, x, axis: Axis = None, keepdims: bool = False):
        self.shape = x.shape
        self.axes = _normalize_axes(axis, x.ndim)
        self.keepdims = keepdims
        return np.sum(x, axis=self.axes, keepdims=keepdims)

    def backward(self, grad):
        grad = _expand_reduced(grad, self.axes, self.keepdims)
        return (np.broadcast_to(grad, self.shape),)


class Mean(Function):
    def forward(self, x, axis: Axis = None, keepdims: bool = False):
        self.shape = x.shape
        self.axes = _normalize_axes(axis, x.ndim)
        self.keepdims = keepdims
        self.count = int(np.prod([x.shape[a] for a in self.axes]))
        return np.mean(x, axis=self.axes, keepdims=keepdims)

    def backward(self, grad):
        grad = _expand_reduced(grad, self.axes, self.keepdims)
        return (np.broadcast_to(grad / self.count, self.shape),)


class Var(Function):
    """Population variance."""

    def forward(self, x, axis: Axis = None, keepdims: bool = False):
        self.axes = _normalize_axes(axis, x.ndim)
        self.keepdims = keepdims
        self.count = int(np.prod([x.shape[a] for a in self.axes]))
        self.centered = x - x.mean(axis=self.axes, keepdims=True)
        return np.mean(self.centered ** 2, axis=self.axes, keepdims=keepdims)

    def backward(self, grad):
        grad = _expand_reduced(grad, self.axes, self.keepdims)
        return (grad * 2.0 * self.centered / self.count,)


# ----------------------------------------------------------------------
# Shape manipulation
# ----------------------------------------------------------------------
class Concat(Function):
    def forward(self, *arrays, axis: int = 0):
        ndim = arrays[0].ndim
        self.axis = axis % ndim
        for array in arrays[1:]:
            if array.ndim != ndim:
                raise ShapeMismatchError(f"concat: rank {array.ndim} != {ndim}")
            for ax in range(ndim):
                if ax != self.axis and array.shape[ax] != arrays[0].shape[ax]:
                    raise ShapeMismatchError(
                        f"concat: axis {ax} differs ({array.shape[ax]} vs {arrays[0].shape[ax]})"
                    )
        self.splits = np.cumsum([a.shape[self.axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=self.axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


class Reshape(Function):
    def forward(self, x, shape: Sequence[int] = ()):
        self.shape = x.shape
        try:
            return x.reshape(tuple(shape))
        except ValueError as exc:
            raise ShapeMismatchError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from exc

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, x, axes: Optional[Sequence[int]] = None):
        self.axes = tuple(range(x.ndim))[::-1] if axes is None else tuple(a % x.ndim for a in axes)
        if sorted(self.axes) != list(range(x.ndim)):
            raise ShapeMismatchError(f"transpose: {axes} is not a permutation of {x.ndim} axes")
        return np.transpose(x, self.axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class Roll(Function):
    def forward(self, x, shifts: Sequence[int] = (), axes: Sequence[int] = ()):
        self.shifts, self.axes = tuple(shifts), tuple(axes)
        return np.roll(x, self.shifts, axis=self.axes)

    def backward(self, grad):
        return (np.roll(grad, tuple(-s for s in self.shifts), axis=self.axes),)


class Pad(Function):
    """Constant padding; `pad_width` follows numpy (one (before, after) pair per axis)."""

    def forward(self, x, pad_width=(), value: float = 0.0):
        self.pad_width = tuple(tuple(p) for p in pad_width)
        if len(self.pad_width) != x.ndim:
            raise ShapeMismatchError(f"pad: {len(self.pad_width)} pad pairs for rank {x.ndim}")
        self.index = tuple(slice(b, b + n) for (b, _), n in zip(self.pad_width, x.shape))
        return np.pad(x, self.pad_width, mode="constant", constant_values=value)

    def backward(self, grad):
        return (grad[self.index],)


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(item is None or item is Ellipsis or isinstance(item, (slice, int, np.integer)) for item in items)


class Slice(Function):
    def forward(self, x, index=None):
        self.shape = x.shape
        self.index = index
        self.basic = _is_basic_index(index)
        return np.array(x[index])

    def backward(self, grad):
        full = np.zeros(self.shape, dtype=grad.dtype)
        if self.basic:
            full[self.index] = grad
        else:
            np.add.at(full, self.index, grad)
        return (full,)


class Gather(Function):
    """Rows of a table selected by an integer index array: out = table[index]."""

    def forward(self, table, index: np.ndarray = None):
        self.shape = table.shape
        self.index = np.asarray(index)
        return table[self.index]

    def backward(self, grad):
        full = np.zeros(self.shape, dtype=grad.dtype)
        np.add.at(full, self.index, grad)
        return (full,)


class TakeAlongLast(Function):
    """out[..., i, j] = x[..., i, index[i, j]] for a 2-D integer index."""

    def forward(self, x, index: np.ndarray = None):
        index = np.asarray(index)
        if index.ndim != 2 or index.shape[0] != x.shape[-2]:
            raise ShapeMismatchError(f"take_along_last: index {index.shape} vs input {x.shape}")
        self.shape = x.shape
        self.index = index
        self.rows = np.arange(index.shape[0])[:, None]
        return x[..., self.rows, index]

    def backward(self, grad):
        lead = int(np.prod(self.shape[:-2])) if len(self.shape) > 2 else 1
        full = np.zeros((lead,) + self.shape[-2:], dtype=grad.dtype)
        np.add.at(full, (slice(None), self.rows, self.index), grad.reshape((lead,) + grad.shape[-2:]))
        return (full.reshape(self.shape),)


# ----------------------------------------------------------------------
# Convolution and pooling
# ----------------------------------------------------------------------
class DepthwiseConv1d(Function):
    """Per-channel convolution over time for (batch, time, channel) input, same padding."""

    def forward(self, x, weight, bias):
        channels, kernel = weight.shape
        if kernel % 2 == 0:
            raise ShapeMismatchError(f"depthwise_conv1d: kernel size {kernel} must be odd")
        if x.shape[-1] != channels or bias.shape != (channels,):
            raise ShapeMismatchError(
                f"depthwise_conv1d: input channels {x.shape[-1]} vs weight {weight.shape}, bias {bias.shape}"
            )
        half = kernel // 2
        steps = x.shape[1]
        self.xp = np.pad(x, ((0, 0), (half, half), (0, 0)))
        self.weight = weight
        out = np.zeros_like(x)
        for tap in range(kernel):
            out += self.xp[:, tap:tap + steps, :] * weight[:, tap]
        return out + bias

    def backward(self, grad):
        channels, kernel = self.weight.shape
        steps = grad.shape[1]
        half = kernel // 2
        grad_xp = np.zeros_like(self.xp)
        grad_w = np.zeros_like(self.weight)
        for tap in range(kernel):
            window = self.xp[:, tap:tap + steps, :]
            grad_w[:, tap] = np.sum(grad * window, axis=(0, 1))
            grad_xp[:, tap:tap + steps, :] += grad * self.weight[:, tap]
        return grad_xp[:, half:half + steps, :], grad_w, grad.sum(axis=(0, 1))


def _pair(value: Union[int, Tuple[int, int]]) -> Tuple[int, int]:
    return (value, value) if isinstance(value, (int, np.integer)) else tuple(value)


class Conv2d(Function):
    """2-D convolution on (batch, in_ch, height, width) with stride and symmetric zero padding."""

    def forward(self, x, weight, bias, stride=1, padding=0):
        out_ch, in_ch, kh, kw = weight.shape
        if x.ndim != 4 or x.shape[1] != in_ch:
            raise ShapeMismatchError(f"conv2d: input {x.shape} does not match weight {weight.shape} on axis 1")
        sh, sw = _pair(stride)
        ph, pw = _pair(padding)
        xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        if xp.shape[2] < kh or xp.shape[3] < kw:
            raise ShapeMismatchError(f"conv2d: padded input {xp.shape[2:]} smaller than kernel {(kh, kw)}")
        windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw]
        self.windows = windows
        self.weight = weight
        self.stride, self.padding = (sh, sw), (ph, pw)
        self.xp_shape = xp.shape
        out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))
        return np.transpose(out, (0, 3, 1, 2)) + bias[:, None, None]

    def backward(self, grad):
        _, _, kh, kw = self.weight.shape
        sh, sw = self.stride
        ph, pw = self.padding
        out_h, out_w = grad.shape[2:]
        grad_w = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = grad.sum(axis=(0, 2, 3))
        grad_xp = np.zeros(self.xp_shape, dtype=grad.dtype)
        for i in range(kh):
            for j in range(kw):
                contrib = np.tensordot(grad, self.weight[:, :, i, j], axes=([1], [0]))
                grad_xp[:, :, i:i + sh * (out_h - 1) + 1:sh, j:j + sw * (out_w - 1) + 1:sw] += np.transpose(
                    contrib, (0, 3, 1, 2)
                )
        height, width = self.xp_shape[2] - 2 * ph, self.xp_shape[3] - 2 * pw
        return grad_xp[:, :, ph:ph + height, pw:pw + width], grad_w, grad_b


class MaxPool2x2(Function):
    """2x2 stride-2 max pooling over the last two axes; odd extents are padded with -inf."""

    def forward(self, x):
        self.shape = x.shape
        ph, pw = x.shape[-2] % 2, x.shape[-1] % 2
        pad = [(0, 0)] * (x.ndim - 2) + [(0, ph), (0, pw)]
        xp = np.pad(x, pad, constant_values=-np.inf) if (ph or pw) else x
        lead = xp.shape[:-2]
        h2, w2 = xp.shape[-2] // 2, xp.shape[-1] // 2
        self.padded_shape = xp.shape
        blocks = xp.reshape(lead + (h2, 2, w2, 2))
        blocks = np.moveaxis(blocks, -3, -2).reshape(lead + (h2, w2, 4))
        self.argmax = blocks.argmax(axis=-1)
        return np.take_along_axis(blocks, self.argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad):
        lead = self.padded_shape[:-2]
        h2, w2 = grad.shape[-2:]
        blocks = np.zeros(lead + (h2, w2, 4), dtype=grad.dtype)
        np.put_along_axis(blocks, self.argmax[..., None], grad[..., None], axis=-1)
        blocks = np.moveaxis(blocks.reshape(lead + (h2, w2, 2, 2)), -2, -3)
        full = blocks.reshape(self.padded_shape)
        return (full[..., : self.shape[-2], : self.shape[-1]],)


# ----------------------------------------------------------------------
# Wrappers
# ----------------------------------------------------------------------
def add(a: Tensor, b: Tensor) -> Tensor:
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Mul.apply(a, b)


def div(a: Tensor, b: Tensor) -> Tensor:
    return Div.apply(a, b)


def neg(x: Tensor) -> Tensor:
    return Neg.apply(x)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ weight (+ bias) with weight stored as (in_features, out_features)."""
    out = matmul(x, weight)
    return add(out, bias) if bias is not None else out


def attention_bias(scores: Tensor, mask: np.ndarray) -> Tensor:
    return AttentionBias.apply(scores, mask=np.asarray(mask, dtype=scores.dtype))


def relu(x: Tensor) -> Tensor:
    return ReLU.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def swish(x: Tensor) -> Tensor:
    return Swish.apply(x)


def tanh(x: Tensor) -> Tensor:
    return Tanh.apply(x)


def gelu(x: Tensor) -> Tensor:
    return GELU.apply(x)


def glu(x: Tensor, axis: int = -1) -> Tensor:
    return GLU.apply(x, axis=axis)


def exp(x: Tensor) -> Tensor:
    return Exp.apply(x)


def log(x: Tensor) -> Tensor:
    return Log.apply(x)


def sqrt(x: Tensor) -> Tensor:
    return Sqrt.apply(x)


def clamp_min(x: Tensor, minimum: float) -> Tensor:
    return ClampMin.apply(x, minimum=minimum)


def dropout(x: Tensor, p: float = 0.0, training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
    if not training or p <= 0.0:
        return x
    return Dropout.apply(x, p=p, rng=rng)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return Softmax.apply(x, axis=axis)


def layer_norm(x: Tensor, gamma: Optional[Tensor] = None, beta: Optional[Tensor] = None, eps: float = 1e-5) -> Tensor:
    channels = x.shape[-1]
    if gamma is None:
        gamma = Tensor(np.ones(channels, dtype=x.dtype))
    if beta is None:
        beta = Tensor(np.zeros(channels, dtype=x.dtype))
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """
    Batch normalisation over every axis but the last (channel) axis.

    In training mode the running statistics are updated in place with an
    exponential moving average (unbiased variance); eval mode uses them.
    """
    if not training:
        return BatchNormEval.apply(x, gamma, beta, running_mean=running_mean, running_var=running_var, eps=eps)

    out = BatchNormTrain.apply(x, gamma, beta, eps=eps)
    axes = tuple(range(x.ndim - 1))
    count = int(np.prod([x.shape[a] for a in axes]))
    batch_mean = x.data.mean(axis=axes)
    batch_var = x.data.var(axis=axes) * (count / max(count - 1, 1))
    running_mean *= 1.0 - momentum
    running_mean += momentum * batch_mean
    running_var *= 1.0 - momentum
    running_var += momentum * batch_var
    return out


def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    return L2Normalize.apply(x, axis=axis, eps=eps)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    return MarginCrossEntropy.apply(logits, labels=np.asarray(labels, dtype=np.int64))


def sum_(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def mean(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    return Mean.apply(x, axis=axis, keepdims=keepdims)


def var(x: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    return Var.apply(x, axis=axis, keepdims=keepdims)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(x, shape=tuple(shape))


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    return Transpose.apply(x, axes=axes)


def roll(x: Tensor, shifts: Sequence[int], axes: Sequence[int]) -> Tensor:
    return Roll.apply(x, shifts=tuple(shifts), axes=tuple(axes))


def pad(x: Tensor, pad_width, value: float = 0.0) -> Tensor:
    return Pad.apply(x, pad_width=pad_width, value=value)


def slice_(x: Tensor, index) -> Tensor:
    return Slice.apply(x, index=index)


def gather(table: Tensor, index: np.ndarray) -> Tensor:
    return Gather.apply(table, index=index)


def take_along_last(x: Tensor, index: np.ndarray) -> Tensor:
    return TakeAlongLast.apply(x, index=index)


def depthwise_conv1d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return DepthwiseConv1d.apply(x, weight, bias)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, stride=1, padding=0) -> Tensor:
    return Conv2d.apply(x, weight, bias, stride=stride, padding=padding)


def max_pool2x2(x: Tensor) -> Tensor:
    return MaxPool2x2.apply(x)

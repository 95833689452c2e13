"""
Core tensor type and reverse-mode differentiation.

A Tensor wraps a row-major numpy buffer (float32 or float64). Every
differentiable kernel is a Function subclass; applying it to tensors that
require gradients links the output to its creator. `backward()` records the
producing operations into a GradTape in topological order and replays it in
reverse, visiting each node once.
"""

import logging
import threading
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DTypeMismatchError, GradientError

logger = logging.getLogger(__name__)

SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

_state = threading.local()


def is_grad_enabled() -> bool:
    """Whether operations are currently recorded for differentiation."""
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording in the current thread (inference, benchmarks)."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """
    Sum a broadcast gradient back down to `shape`.

    Args:
        grad: Gradient with the broadcast (output) shape
        shape: Shape of the operand that was broadcast

    Returns:
        Gradient with exactly `shape`
    """
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Function:
    """
    Base class for differentiable kernels.

    Subclasses implement `forward` on raw arrays and `backward`, which maps
    the gradient of the output to one gradient (or None) per input tensor.
    State needed by the backward pass is kept on the instance.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no forward pass")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__} has no backward pass")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        """
        Run the kernel and link the result to the tape when needed.

        Args:
            *inputs: Input tensors, all of one dtype
            **kwargs: Non-differentiable kernel arguments

        Returns:
            Output tensor in the inputs' dtype
        """
        dtype = inputs[0].dtype
        for tensor in inputs[1:]:
            if tensor.dtype != dtype:
                raise DTypeMismatchError(
                    f"{cls.__name__}: dtype mismatch {dtype} vs {tensor.dtype}"
                )

        func = cls(*inputs)
        out = func.forward(*(t.data for t in inputs), **kwargs)
        out = np.asarray(out).astype(dtype, copy=False)

        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=func if requires_grad else None)


class Tensor:
    """n-dimensional numeric array with optional gradient tracking."""

    __array_priority__ = 1000  # numpy scalars defer to Tensor operators

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[Union[str, np.dtype, type]] = None,
        creator: Optional[Function] = None,
    ):
        """
        Wrap an array.

        Args:
            data: Values; integer input defaults to float32
            requires_grad: Track gradients for this tensor
            dtype: float32 or float64; defaults to the data's float dtype
            creator: Function that produced this tensor (None for leaves)
        """
        array = np.asarray(data)
        if dtype is not None:
            target = np.dtype(dtype)
        elif array.dtype in SUPPORTED_DTYPES:
            target = array.dtype
        else:
            target = np.dtype(np.float32)
        if target not in SUPPORTED_DTYPES:
            raise DTypeMismatchError(f"Unsupported dtype {target}; use float32 or float64")

        self.data = np.asarray(array, dtype=target, order="C")
        self.requires_grad = requires_grad
        self.creator = creator
        self.grad: Optional[np.ndarray] = None
        self.name: Optional[str] = None

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self.creator is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=self.dtype)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def backward(self) -> Dict["Tensor", np.ndarray]:
        return backward(self)

    # ------------------------------------------------------------------
    # Operators (kernels live in functional.py)
    # ------------------------------------------------------------------
    def _lift(self, other: Union["Tensor", float, int, np.ndarray]) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other):
        return F.add(self, self._lift(other))

    def __radd__(self, other):
        return F.add(self._lift(other), self)

    def __sub__(self, other):
        return F.sub(self, self._lift(other))

    def __rsub__(self, other):
        return F.sub(self._lift(other), self)

    def __mul__(self, other):
        return F.mul(self, self._lift(other))

    def __rmul__(self, other):
        return F.mul(self._lift(other), self)

    def __truediv__(self, other):
        return F.div(self, self._lift(other))

    def __rtruediv__(self, other):
        return F.div(self._lift(other), self)

    def __neg__(self):
        return F.neg(self)

    def __matmul__(self, other):
        return F.matmul(self, self._lift(other))

    def __getitem__(self, index):
        return F.slice_(self, index)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return F.transpose(self, axes or None)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return F.sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return F.mean(self, axis=axis, keepdims=keepdims)

    def var(self, axis=None, keepdims: bool = False) -> "Tensor":
        return F.var(self, axis=axis, keepdims=keepdims)


class GradTape:
    """
    Ordered record of the differentiable operations behind a tensor.

    `nodes` holds non-leaf tensors with every producer before its consumers;
    `leaves` holds the gradient-requiring leaf tensors that were reached.
    """

    def __init__(self, nodes: List[Tensor], leaves: List[Tensor]):
        self.nodes = nodes
        self.leaves = leaves

    @classmethod
    def record(cls, root: Tensor) -> "GradTape":
        """
        Collect the operations producing `root` in topological order.

        Args:
            root: Output tensor

        Returns:
            GradTape over the recorded graph
        """
        order: List[Tensor] = []
        leaves: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            if node.creator is None:
                leaves.append(node)
                continue
            stack.append((node, True))
            for parent in node.creator.inputs:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order, leaves)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.nodes)

    def replay(self, seed: np.ndarray) -> Dict[Tensor, np.ndarray]:
        """
        Propagate `seed` (d loss / d root) back to every leaf.

        Leaf gradients are accumulated into `leaf.grad`; the returned map
        holds the contribution of this pass alone.
        """
        pending: Dict[int, np.ndarray] = {id(self.nodes[-1]): seed}
        contributions: Dict[int, np.ndarray] = {}
        by_id: Dict[int, Tensor] = {}

        for node in reversed(self.nodes):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            input_grads = node.creator.backward(grad)
            for parent, parent_grad in zip(node.creator.inputs, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = unbroadcast(np.asarray(parent_grad), parent.shape)
                target = contributions if parent.creator is None else pending
                if parent.creator is None:
                    by_id[id(parent)] = parent
                if id(parent) in target:
                    target[id(parent)] = target[id(parent)] + parent_grad
                else:
                    target[id(parent)] = parent_grad

        result: Dict[Tensor, np.ndarray] = {}
        for key, grad in contributions.items():
            leaf = by_id[key]
            leaf.accumulate_grad(grad)
            result[leaf] = grad.astype(leaf.dtype, copy=False)
        return result


def backward(loss: Tensor) -> Dict[Tensor, np.ndarray]:
    """
    Reverse-mode differentiation of a scalar loss.

    Every gradient-requiring leaf reachable from `loss` receives
    d(loss)/d(leaf) in its `.grad`; repeated calls accumulate until
    `zero_grad()`.

    Args:
        loss: Scalar tensor produced by recorded operations

    Returns:
        Map from each reached leaf to the gradient of this call

    Raises:
        GradientError: if `loss` is not scalar or is detached from the tape
    """
    if loss.size != 1:
        raise GradientError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise GradientError("Loss does not depend on any tensor that requires gradients")
    if loss.creator is None:
        seed = np.ones(loss.shape, dtype=loss.dtype)
        loss.accumulate_grad(seed)
        return {loss: seed}

    tape = GradTape.record(loss)
    logger.debug("Replaying tape with %d operations and %d leaves", len(tape), len(tape.leaves))
    return tape.replay(np.ones(loss.shape, dtype=loss.dtype))


# Kernels reference Tensor, so they are imported once the class exists.
from . import functional as F  # noqa: E402  pylint: disable=wrong-import-position

"""
Finite-difference gradient oracle.

Central differences in float64 are the reference every analytic backward
pass in the package is checked against.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Union

import numpy as np

from ..errors import DTypeMismatchError, GradientError
from .tensor import Tensor, no_grad

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


def _scalar(value: Union[Tensor, float, np.ndarray]) -> float:
    array = value.data if isinstance(value, Tensor) else np.asarray(value)
    if array.size != 1:
        raise GradientError(f"Function must return a scalar, got shape {array.shape}")
    return float(array.reshape(-1)[0])


def finite_difference_gradient(
    f: Callable[[Tensor], Union[Tensor, float]],
    x: Tensor,
    h: float = DEFAULT_STEP,
    coords: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Central-difference gradient (f(x+h·e) − f(x−h·e)) / 2h per coordinate.

    Args:
        f: Pure, deterministic function of `x` returning a scalar
        x: float64 point of evaluation
        h: Step size
        coords: Optional flat coordinate indices to probe (others stay 0)

    Returns:
        Gradient estimate with the shape of `x`
    """
    if x.dtype != np.float64:
        raise DTypeMismatchError(f"finite differences need float64 input, got {x.dtype}")

    flat = x.data.reshape(-1)
    grad = np.zeros_like(flat)
    indices = range(flat.size) if coords is None else coords
    with no_grad():
        for i in indices:
            original = flat[i]
            flat[i] = original + h
            plus = _scalar(f(x))
            flat[i] = original - h
            minus = _scalar(f(x))
            flat[i] = original
            grad[i] = (plus - minus) / (2.0 * h)
    return Tensor(grad.reshape(x.shape), dtype=np.float64)


ZERO_GRADIENT_RATIO = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray, scale: Optional[float] = None) -> float:
    """
    Max over coordinates of |a − n| / (|n| + 1e-8).

    Coordinates where both |a| and |n| are at most 1e-5 · `scale` are
    treated as zero gradients (a bias ahead of a normalisation, a softmax
    shift direction) whose central difference is pure rounding noise;
    those alone are judged against 1e-8 + 1e-3 · `scale` instead of |n|.
    `scale` defaults to the largest |n| in `numeric`; `check_gradients`
    passes the largest |n| over every tensor of the check.
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if numeric.size == 0:
        return 0.0
    if scale is None:
        scale = float(np.max(np.abs(numeric)))
    zero = ZERO_GRADIENT_RATIO * scale
    structural = (np.abs(analytic) <= zero) & (np.abs(numeric) <= zero)
    denominator = np.where(structural, 1e-8 + 1e-3 * scale, np.abs(numeric) + 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denominator))


@dataclass
class GradCheckResult:
    """Outcome of one gradient check."""

    name: str
    errors: Dict[str, float] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_error)) and self.max_error < self.tolerance


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Mapping[str, Tensor],
    name: str = "check",
    h: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int = 0,
    max_coords: Optional[int] = None,
) -> GradCheckResult:
    """
    Compare autodiff against central differences for every tensor in `tensors`.

    `fn` closes over the tensors and may return any shape; it is reduced to
    a scalar through a fixed random projection so every output coordinate
    contributes. All coordinates are checked unless `max_coords` is given.

    Args:
        fn: Zero-argument function computing the output
        tensors: float64 tensors (inputs or parameters) to differentiate
        name: Label for the report
        h: Finite-difference step
        tolerance: Maximum admissible relative error
        seed: Seed for the projection and coordinate sampling
        max_coords: Check at most this many coordinates per tensor

    Returns:
        GradCheckResult with one error per tensor
    """
    rng = np.random.default_rng(seed)
    reference = fn()
    projection = Tensor(rng.standard_normal(reference.shape) / np.sqrt(max(reference.size, 1)), dtype=np.float64)

    def loss(_: Tensor = None) -> Tensor:
        return (fn() * projection).sum()

    for tensor in tensors.values():
        tensor.requires_grad = True
        tensor.zero_grad()
    loss().backward()

    pairs = {}
    for key, tensor in tensors.items():
        analytic = np.array(tensor.grad) if tensor.grad is not None else np.zeros_like(tensor.data)
        coords = np.arange(tensor.size)
        if max_coords is not None and tensor.size > max_coords:
            coords = rng.choice(tensor.size, size=max_coords, replace=False)
        numeric = finite_difference_gradient(loss, tensor, h=h, coords=coords).data
        pairs[key] = (analytic.reshape(-1)[coords], numeric.reshape(-1)[coords])
        tensor.zero_grad()

    scale = max((float(np.max(np.abs(n))) for _, n in pairs.values() if n.size), default=0.0)
    result = GradCheckResult(name=name, tolerance=tolerance)
    for key, (analytic, numeric) in pairs.items():
        result.errors[key] = relative_error(analytic, numeric, scale)

    logger.debug("gradcheck %s: max relative error %.3e (scale %.2e)", name, result.max_error, scale)
    return result

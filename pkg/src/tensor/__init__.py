"""Dense tensor engine with reverse-mode differentiation and a finite-difference oracle."""

from .tensor import Function, GradTape, Tensor, backward, is_grad_enabled, no_grad
from .gradcheck import GradCheckResult, check_gradients, finite_difference_gradient, relative_error

__all__ = [
    "Function",
    "GradTape",
    "Tensor",
    "backward",
    "is_grad_enabled",
    "no_grad",
    "GradCheckResult",
    "check_gradients",
    "finite_difference_gradient",
    "relative_error",
]

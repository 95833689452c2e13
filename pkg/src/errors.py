"""
Exception hierarchy shared by every LocalSV package.

The CLI maps validation-type errors to exit code 1 and anything else to
exit code 2, so new error types should derive from the matching base.
"""


class LocalSVError(Exception):
    """Base class for all LocalSV errors."""


class ShapeMismatchError(LocalSVError, ValueError):
    """Raised when tensor shapes are incompatible for an operation."""


class DTypeMismatchError(LocalSVError, TypeError):
    """Raised when tensors of different or unsupported dtypes are combined."""


class GradientError(LocalSVError, RuntimeError):
    """Raised for invalid backward passes or gradient-oracle targets."""


class ConfigValidationError(LocalSVError, ValueError):
    """Raised when a run configuration cannot be parsed or validated."""


class FormatError(LocalSVError, ValueError):
    """Raised when a binary or text file does not match its declared format."""


class MissingIdError(LocalSVError, KeyError):
    """Raised when a trial references an utterance id missing from the store."""

    def __str__(self) -> str:
        # KeyError quotes its message; keep it readable on the CLI
        return str(self.args[0]) if self.args else ""


class MetricError(LocalSVError, ValueError):
    """Raised when a score set cannot support EER/minDCF computation."""


class LabelError(LocalSVError, ValueError):
    """Raised when a class label lies outside the classifier's range."""


class NonFiniteLossError(LocalSVError, RuntimeError):
    """Raised when training produces a NaN or infinite loss."""

    def __init__(self, step: int, loss: float):
        super().__init__(f"Non-finite loss {loss} at step {step}")
        self.step = step
        self.loss = loss


class CheckpointMismatchError(LocalSVError, ValueError):
    """Raised when a checkpoint does not match the model's parameter registry."""


VALIDATION_ERRORS = (
    ConfigValidationError,
    FormatError,
    ShapeMismatchError,
    DTypeMismatchError,
    MissingIdError,
    MetricError,
    LabelError,
    CheckpointMismatchError,
)

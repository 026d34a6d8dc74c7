"""Dense tensors with reverse-mode automatic differentiation."""

from . import kernels, ops
from .gradcheck import GradReport, grad_check, relative_error
from .ops import (
    IGNORE_INDEX,
    add,
    concat,
    cross_entropy,
    embedding,
    gelu,
    layer_norm,
    log_softmax,
    matmul,
    mean,
    mse,
    mul,
    permute,
    pick,
    reshape,
    scale,
    slice,
    softmax,
    square_norm,
    sub,
    sum,
    transpose,
)
from .tensor import REGISTRY, Tape, Tensor, as_tensor, backward, grad, no_grad

__all__ = [
    "GradReport", "IGNORE_INDEX", "REGISTRY", "Tape", "Tensor", "add", "as_tensor",
    "backward", "concat", "cross_entropy", "embedding", "gelu", "grad", "grad_check",
    "kernels", "layer_norm", "log_softmax", "matmul", "mean", "mse", "mul", "no_grad",
    "ops", "permute", "pick", "relative_error", "reshape", "scale", "slice", "softmax",
    "square_norm", "sub", "sum", "transpose",
]

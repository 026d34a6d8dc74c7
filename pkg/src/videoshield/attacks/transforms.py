"""Differentiable preprocessing applied inside the attack loop."""

from __future__ import annotations

import numpy as np

from .. import tensorcore as tc
from ..errors import ConfigError
from ..resample import bilinear_matrix, box_matrix
from ..tensorcore import Tensor, no_grad
from .config import Transform


def transform_matrices(transform, height: int, width: int):
    """Row and column operators (H x H, W x W) for one transform."""
    if transform.kind == "resize_down_up":
        f = transform.param
        hs, ws = max(1, height // f), max(1, width // f)
        rows = bilinear_matrix(hs, height) @ bilinear_matrix(height, hs)
        cols = bilinear_matrix(ws, width) @ bilinear_matrix(width, ws)
        return rows, cols
    k = transform.param
    if k > height or k > width:
        raise ConfigError(f"mean_filter kernel {k} larger than frame {height}x{width}")
    return box_matrix(height, k), box_matrix(width, k)


def apply_transform_pipeline(x, transforms) -> Tensor:
    """Apply ``transforms`` (Transform or ``kind:param`` text) in order to an (F, H, W, C) video."""
    x = tc.as_tensor(x)
    if not transforms:
        return x
    h, w = x.shape[1], x.shape[2]
    y = x.permute(0, 3, 1, 2)
    for t in transforms:
        t = t if isinstance(t, Transform) else Transform.parse(t)
        rows, cols = transform_matrices(t, h, w)
        y = tc.matmul(Tensor(rows, dtype=x.dtype), y)
        y = tc.matmul(y, Tensor(cols.T, dtype=x.dtype))
    return y.permute(0, 2, 3, 1)


def transform_video(video: np.ndarray, transforms) -> np.ndarray:
    """Numpy convenience: run the pipeline without a tape and clamp to [0, 1]."""
    if not transforms:
        return np.asarray(video, dtype=np.float32)
    with no_grad():
        out = apply_transform_pipeline(Tensor(video), transforms).data
    return np.clip(out, 0.0, 1.0).astype(np.float32)

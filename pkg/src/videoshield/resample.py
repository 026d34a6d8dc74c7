"""Linear resampling operators as dense matrices.

Both operators act on one spatial axis; applying one along H and one along W
gives the 2-D version. Keeping them as matrices makes them differentiable
through ``matmul`` and trivially reusable between frame import and the
attack transform pipeline.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) half-pixel-centre linear interpolation weights.

    Source coordinate for output ``i`` is ``(i + 0.5) * n_in / n_out - 0.5``,
    clamped to the valid range.
    """
    m = np.zeros((n_out, n_in), dtype=np.float64)
    ratio = n_in / n_out
    for i in range(n_out):
        src = min(max((i + 0.5) * ratio - 0.5, 0.0), n_in - 1.0)
        i0 = int(np.floor(src))
        i1 = min(i0 + 1, n_in - 1)
        w = src - i0
        m[i, i0] += 1.0 - w
        m[i, i1] += w
    m.setflags(write=False)
    return m


@lru_cache(maxsize=64)
def box_matrix(n: int, k: int) -> np.ndarray:
    """(n, n) length-``k`` moving average with edge replication."""
    m = np.zeros((n, n), dtype=np.float64)
    lo = -(k // 2)
    for i in range(n):
        for off in range(lo, lo + k):
            j = min(max(i + off, 0), n - 1)
            m[i, j] += 1.0 / k
    m.setflags(write=False)
    return m


def resize_frames(video: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize of an (F, H, W, C) array; plain numpy, no tape."""
    f, h, w, c = video.shape
    if (h, w) == (height, width):
        return video
    rows = bilinear_matrix(h, height)
    cols = bilinear_matrix(w, width)
    out = np.einsum("ih,fhwc,jw->fijc", rows, video.astype(np.float64), cols)
    return np.clip(out, 0.0, 1.0).astype(np.float32)

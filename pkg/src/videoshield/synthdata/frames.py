"""Import a directory of per-frame PNG images as a video tensor."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import FrameImportError
from ..resample import resize_frames


def temporal_indices(n_in: int, n_out: int) -> list[int]:
    """Uniform-stride frame selection, e.g. 16 -> 8 picks 0, 2, ..., 14."""
    return [int(i * n_in // n_out) for i in range(n_out)]


def import_frames(directory, frames: int = 8, height: int = 32, width: int = 32) -> np.ndarray:
    root = Path(directory)
    if not root.is_dir():
        raise FrameImportError(f"{directory}: not a directory")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() == ".png")
    if not paths:
        raise FrameImportError(f"{directory}: no PNG frames found")
    decoded = []
    for p in paths:
        try:
            with Image.open(p) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
        except (UnidentifiedImageError, OSError) as exc:
            raise FrameImportError(f"{p}: cannot decode image") from exc
        if decoded and arr.shape != decoded[0].shape:
            raise FrameImportError(
                f"{p}: frame size {arr.shape[:2]} differs from {decoded[0].shape[:2]}"
            )
        decoded.append(arr)
    picked = np.stack([decoded[i] for i in temporal_indices(len(decoded), frames)])
    return resize_frames(picked, height, width)

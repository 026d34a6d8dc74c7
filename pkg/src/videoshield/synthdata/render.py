"""Procedural moving-shape clips with template captions."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import SpecError

SHAPES = ("square", "circle", "triangle")
COLORS = ("red", "green", "blue", "yellow", "white")
DIRECTIONS = ("left", "right", "up", "down")

RGB = {
    "red": (1.0, 0.0, 0.0),
    "green": (0.0, 1.0, 0.0),
    "blue": (0.0, 0.0, 1.0),
    "yellow": (1.0, 1.0, 0.0),
    "white": (1.0, 1.0, 1.0),
}
STEP = {"left": (-1.0, 0.0), "right": (1.0, 0.0), "up": (0.0, -1.0), "down": (0.0, 1.0)}

BACKGROUND_LEVEL = 0.2
TEXTURE_AMPLITUDE = 0.02


@dataclass(frozen=True)
class SceneSpec:
    shape: str
    color: str
    direction: str
    speed: float = 1.0
    start: tuple[float, float] = (16.0, 16.0)
    size: float = 10.0

    def validate(self) -> None:
        if self.shape not in SHAPES:
            raise SpecError(f"unknown shape {self.shape!r}")
        if self.color not in COLORS:
            raise SpecError(f"unknown color {self.color!r}")
        if self.direction not in DIRECTIONS:
            raise SpecError(f"unknown direction {self.direction!r}")
        if self.size <= 0 or self.speed < 0:
            raise SpecError("size must be positive and speed non-negative")

    @property
    def caption(self) -> str:
        return caption_for(self.shape, self.color, self.direction)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = list(self.start)
        return d


def caption_for(shape: str, color: str, direction: str) -> str:
    return f"a {color} {shape} moves {direction}"


@dataclass
class SyntheticSample:
    video: np.ndarray
    caption: str
    spec: SceneSpec
    seed: int


def _signed_distance(shape, dx, dy, size):
    half = size / 2.0
    if shape == "square":
        qx = np.abs(dx) - half
        qy = np.abs(dy) - half
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        return outside + np.minimum(np.maximum(qx, qy), 0.0)
    if shape == "circle":
        return np.hypot(dx, dy) - half
    # isosceles triangle, apex up; max of edge half-plane distances
    base = dy - half
    left = (-2.0 * dx - (dy + half)) / np.sqrt(5.0)
    right = (2.0 * dx - (dy + half)) / np.sqrt(5.0)
    return np.maximum(base, np.maximum(left, right))


def render_sample(spec: SceneSpec, seed: int, frames: int = 8, height: int = 32,
                  width: int = 32) -> SyntheticSample:
    """Render ``spec`` as an (F, H, W, 3) clip in [0, 1].

    The object edge is antialiased from its signed distance; the background
    is a flat grey plus a static seeded texture.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    texture = rng.uniform(-TEXTURE_AMPLITUDE, TEXTURE_AMPLITUDE, size=(height, width, 3))
    background = BACKGROUND_LEVEL + texture
    color = np.asarray(RGB[spec.color])
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64) + 0.5
    sx, sy = STEP[spec.direction]
    video = np.empty((frames, height, width, 3), dtype=np.float32)
    for t in range(frames):
        cx = spec.start[0] + sx * spec.speed * t
        cy = spec.start[1] + sy * spec.speed * t
        sdf = _signed_distance(spec.shape, xs - cx, ys - cy, spec.size)
        cover = np.clip(0.5 - sdf, 0.0, 1.0)[..., None]
        if not cover.any():
            raise SpecError(f"object leaves the frame entirely at frame {t}")
        video[t] = np.clip(background * (1.0 - cover) + color * cover, 0.0, 1.0)
    return SyntheticSample(video=video, caption=spec.caption, spec=spec, seed=int(seed))

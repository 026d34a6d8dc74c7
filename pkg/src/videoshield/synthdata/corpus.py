"""Balanced corpus generation over the caption grammar."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .render import COLORS, DIRECTIONS, SHAPES, SceneSpec, SyntheticSample, render_sample

GRAMMAR = tuple(itertools.product(SHAPES, COLORS, DIRECTIONS))
SPEEDS = (1.0, 1.5, 2.0)
SIZE_RANGE = (8.0, 12.0)


@dataclass
class Corpus:
    train: list[SyntheticSample]
    heldout: list[SyntheticSample]

    def __len__(self) -> int:
        return len(self.train) + len(self.heldout)


def _sample_geometry(rng, direction, frames, height, width):
    # SIZE_RANGE and SPEEDS are for 32-pixel, 8-frame clips; other geometries scale them
    scale = min(height, width) / 32.0
    size = float(np.round(rng.uniform(*SIZE_RANGE) * scale, 2))
    speed = float(rng.choice(SPEEDS)) * scale * 7.0 / max(frames - 1, 1)
    margin = size / 2.0 + 0.5
    travel = speed * (frames - 1)
    fixed = lambda extent: float(np.round(rng.uniform(margin, extent - margin), 2))  # noqa: E731
    if direction in ("left", "right"):
        lo, hi = margin, width - margin - travel
        x = float(np.round(rng.uniform(lo, hi), 2))
        if direction == "left":
            x += travel
        start = (x, fixed(height))
    else:
        lo, hi = margin, height - margin - travel
        y = float(np.round(rng.uniform(lo, hi), 2))
        if direction == "up":
            y += travel
        start = (fixed(width), y)
    return size, speed, start


def sample_specs(n: int, seed: int, frames: int = 8, height: int = 32, width: int = 32):
    """``n`` distinct scene specs with every grammar combination used equally often.

    Combinations are dealt from successive shuffled passes over the grammar,
    so counts differ by at most one.
    """
    rng = np.random.default_rng(seed)
    order = []
    while len(order) < n:
        order.extend(rng.permutation(len(GRAMMAR)).tolist())
    seen = set()
    specs = []
    for idx in order[:n]:
        shape, color, direction = GRAMMAR[idx]
        while True:
            size, speed, start = _sample_geometry(rng, direction, frames, height, width)
            spec = SceneSpec(shape, color, direction, speed, start, size)
            if spec not in seen:
                break
        seen.add(spec)
        specs.append(spec)
    seeds = rng.integers(0, 2**31 - 1, size=n)
    return specs, [int(s) for s in seeds]


def generate_corpus(n: int = 2000, seed: int = 0, split_ratio: float = 0.9, frames: int = 8,
                    height: int = 32, width: int = 32) -> Corpus:
    if n < 10:
        raise ValueError(f"corpus needs at least 10 samples, got {n}")
    if not 0.0 < split_ratio < 1.0:
        raise ValueError(f"split_ratio must lie in (0, 1), got {split_ratio}")
    specs, seeds = sample_specs(n, seed, frames, height, width)
    samples = [render_sample(s, sd, frames, height, width) for s, sd in zip(specs, seeds)]
    cut = int(round(n * split_ratio))
    return Corpus(train=samples[:cut], heldout=samples[cut:])

"""l-infinity projection and the random-noise baseline."""

from __future__ import annotations

import numpy as np


def project_linf(x: np.ndarray, delta: np.ndarray, eps: float) -> np.ndarray:
    """Clamp ``delta`` to [-eps, eps], then so that ``x + delta`` stays in [0, 1].

    ``x`` is the float32 source video; the returned perturbation is float64
    and equals ``adversarial(x, ...) - x`` exactly, where the adversarial
    video is rounded to float32. Rounding can push an element past ``eps``
    by at most one float32 ulp.
    """
    x64 = np.asarray(x, dtype=np.float64)
    if np.shape(delta) != x64.shape:
        raise ValueError(f"perturbation shape {np.shape(delta)} != video shape {x64.shape}")
    d = np.clip(np.asarray(delta, dtype=np.float64), -eps, eps)
    adv = np.clip(x64 + d, 0.0, 1.0).astype(np.float32)
    return adv.astype(np.float64) - x64


def apply_perturbation(x: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) + delta).astype(np.float32)


def random_noise_baseline(x: np.ndarray, eps: float, seed: int) -> np.ndarray:
    """Add i.i.d. uniform noise in [-eps, eps] and clamp to the pixel range."""
    x = np.asarray(x, dtype=np.float32)
    if eps == 0:
        return x.copy()
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-eps, eps, size=x.shape)
    return apply_perturbation(x, project_linf(x, noise, eps))

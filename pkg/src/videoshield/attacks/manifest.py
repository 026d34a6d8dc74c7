"""Run manifests for attack results (JSON text, stable key order)."""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .. import __version__
from .config import AttackResult


def content_hash(video: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(video, dtype="<f4").tobytes()).hexdigest()


def result_manifest(result: AttackResult, video_id: str = "", record_timing: bool = False,
                    extra: dict | None = None) -> dict:
    """Manifest dict for one attack.

    Wall-clock time is only included when ``record_timing`` is set, so that
    default manifests are byte-identical across reruns.
    """
    m = {
        "tool": "videoshield",
        "version": __version__,
        "video_id": video_id,
        "method": result.method,
        "config": result.config.to_dict(),
        "iterations": result.iterations,
        "early_stopped": result.early_stopped,
        "stagnated": result.stagnated,
        "losses": [float(v) for v in result.losses],
        "final_loss": result.final_loss,
        "adversarial_sha256": content_hash(result.adversarial),
    }
    if result.extras:
        m["extras"] = result.extras
    if record_timing:
        m["elapsed_seconds"] = result.elapsed
    if extra:
        m.update(extra)
    return m


def dumps_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"

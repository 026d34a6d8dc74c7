"""Video directories: ``<id>.vidt`` files plus an optional ``captions.csv``."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InputError, IOFormatError
from ..synthdata import load_video, save_video

CAPTIONS_FILE = "captions.csv"


@dataclass(frozen=True)
class VideoItem:
    video_id: str
    video: np.ndarray
    caption: str | None = None


def write_video_dir(directory, items, extra_columns: dict | None = None) -> None:
    """Write videos and, when any caption is known, a captions.csv index."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for it in items:
        save_video(it.video, d / f"{it.video_id}.vidt")
    if any(it.caption is not None for it in items):
        cols = sorted(extra_columns or {})
        with open(d / CAPTIONS_FILE, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["video_id", "caption"] + cols)
            for it in items:
                w.writerow([it.video_id, it.caption or ""] +
                           [extra_columns[c].get(it.video_id, "") for c in cols])


def read_references(directory) -> dict[str, str]:
    path = Path(directory) / CAPTIONS_FILE
    if not path.exists():
        return {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except (OSError, csv.Error) as exc:
        raise IOFormatError(f"cannot read {path}: {exc}") from exc
    if rows and ("video_id" not in rows[0] or "caption" not in rows[0]):
        raise IOFormatError(f"{path}: needs video_id and caption columns")
    return {r["video_id"]: r["caption"] for r in rows}


def read_video_dir(directory, limit: int | None = None, require_references: bool = False):
    """Load ``<id>.vidt`` files in sorted id order."""
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"video directory {os.fspath(d)!r} does not exist")
    paths = sorted(d.glob("*.vidt"))
    if not paths:
        raise InputError(f"no .vidt videos in {os.fspath(d)!r}")
    if limit is not None:
        paths = paths[:limit]
    refs = read_references(d)
    items = []
    for p in paths:
        vid = p.stem
        if require_references and vid not in refs:
            raise InputError(f"{os.fspath(d)}: no reference caption for video {vid!r}")
        items.append(VideoItem(vid, load_video(p), refs.get(vid)))
    return items


def samples_to_items(samples, prefix: str) -> list[VideoItem]:
    return [VideoItem(f"{prefix}{i:05d}", s.video, s.caption) for i, s in enumerate(samples)]

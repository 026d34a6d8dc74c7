"""Synthetic video/caption corpus, VIDT file I/O, and frame import."""

from .corpus import GRAMMAR, Corpus, generate_corpus, sample_specs
from .frames import import_frames, temporal_indices
from .render import COLORS, DIRECTIONS, SHAPES, SceneSpec, SyntheticSample, caption_for, render_sample
from .vidio import HEADER_SIZE, decode_video, encode_video, load_video, save_video

__all__ = [
    "COLORS", "Corpus", "DIRECTIONS", "GRAMMAR", "HEADER_SIZE", "SHAPES", "SceneSpec",
    "SyntheticSample", "caption_for", "decode_video", "encode_video", "generate_corpus",
    "import_frames", "load_video", "render_sample", "sample_specs", "save_video",
    "temporal_indices",
]

"""Protective adversarial watermarks for video captioning models, at desk scale."""

__version__ = "0.1.0"

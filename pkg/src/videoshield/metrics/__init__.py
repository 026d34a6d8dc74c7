"""Caption quality, length/EOS statistics and mechanism diagnostics."""

from .diagnostics import diagnostics, predictive_entropy
from .report import (
    MetricReport,
    build_report,
    caption_records,
    evaluate_captions,
    histogram_csv,
    report_csv,
)
from .stats import CaptionRecord, LengthStats, incomplete_rate, length_and_eos_stats
from .text import as_tokens, bleu, caption_similarity

__all__ = [
    "CaptionRecord", "LengthStats", "MetricReport", "as_tokens", "bleu", "build_report",
    "caption_records", "caption_similarity", "diagnostics", "evaluate_captions", "histogram_csv",
    "incomplete_rate", "length_and_eos_stats", "predictive_entropy", "report_csv",
]

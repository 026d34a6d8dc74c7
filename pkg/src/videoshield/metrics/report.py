"""Per-video and aggregate metric reports, with CSV serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .. import __version__
from ..captioner.api import GREEDY, DecodeConfig, generate
from ..captioner.vocab import BOS, PAD
from ..errors import InputError
from .stats import CaptionRecord, length_and_eos_stats
from .text import bleu, caption_similarity

ROW_FIELDS = ("video_id", "prompt", "caption", "reference", "length", "terminated",
              "bleu", "similarity")


@dataclass
class MetricReport:
    rows: list[dict]
    bleu: float
    similarity: float
    mean_length: float
    eos_rate: float
    histogram: list[tuple[int, int]]
    incomplete_rate: float | None
    diagnostics: dict | None = None
    meta: dict = field(default_factory=dict)

    def aggregate(self) -> dict:
        out = {
            "n": len(self.rows),
            "bleu": self.bleu,
            "similarity": self.similarity,
            "mean_length": self.mean_length,
            "eos_rate": self.eos_rate,
            "incomplete_rate": self.incomplete_rate,
        }
        if self.diagnostics:
            out.update(self.diagnostics)
        return out

    def to_dict(self) -> dict:
        return {
            "aggregate": self.aggregate(),
            "histogram": [list(p) for p in self.histogram],
            "rows": self.rows,
            "meta": self.meta,
        }


def _fsum_mean(values) -> float:
    # fixed-order summation keeps aggregates independent of evaluation order upstream
    values = list(values)
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def build_report(records, references, diagnostics=None, meta=None) -> MetricReport:
    """Score ``records`` against reference texts keyed by video id."""
    records = list(records)
    if not records:
        raise InputError("no caption records to score")
    rows = []
    for r in records:
        if r.video_id not in references:
            raise InputError(f"no reference caption for {r.video_id!r}")
        ref = references[r.video_id]
        rows.append({
            "video_id": r.video_id,
            "prompt": r.prompt,
            "caption": r.text,
            "reference": ref,
            "length": r.length,
            "terminated": r.terminated,
            "bleu": bleu(r.text, ref),
            "similarity": caption_similarity(r.text, ref),
        })
    stats = length_and_eos_stats(records)
    non_empty = [r for r in records if r.length > 0]
    inc = None
    if non_empty:
        inc = 100.0 * sum(1 for r in non_empty if r.text.rstrip()[-1].isalpha()) / len(non_empty)
    return MetricReport(
        rows=rows,
        bleu=_fsum_mean(row["bleu"] for row in rows),
        similarity=_fsum_mean(row["similarity"] for row in rows),
        mean_length=stats.mean_length,
        eos_rate=stats.eos_rate,
        histogram=stats.histogram,
        incomplete_rate=inc,
        diagnostics=diagnostics,
        meta=dict(meta or {}),
    )


def caption_records(model, videos, prompt, decode: DecodeConfig = GREEDY):
    """Caption every ``(video_id, video)`` pair and return CaptionRecords."""
    out = []
    for vid, video in videos:
        seq = generate(model, video, prompt, decode)
        text = model.vocab.decode(seq.tokens)
        # PAD/BOS emitted mid-caption are not rendered, so they do not count
        length = sum(1 for t in seq.tokens if t not in (PAD, BOS))
        out.append(CaptionRecord(vid, prompt, text, length, seq.terminated, decode.to_dict()))
    return out


def evaluate_captions(model, videos, references, prompt, decode: DecodeConfig = GREEDY,
                      meta=None) -> MetricReport:
    videos = list(videos)
    if not videos:
        raise InputError("nothing to evaluate")
    return build_report(caption_records(model, videos, prompt, decode), references, meta=meta)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    if v is None:
        return ""
    return v


def report_csv(report: MetricReport, config: dict | None = None) -> str:
    """CSV with ``#`` header lines carrying tool version and resolved config.

    One row per video, then an ``__aggregate__`` row.
    """
    buf = io.StringIO()
    buf.write(f"# videoshield {__version__}\n")
    if config is not None:
        buf.write("# config " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for row in report.rows:
        w.writerow([_fmt(row[k]) for k in ROW_FIELDS])
    agg = report.aggregate()
    w.writerow(["__aggregate__", "", "", "", _fmt(agg["mean_length"]), _fmt(100.0 - agg["eos_rate"]),
                _fmt(agg["bleu"]), _fmt(agg["similarity"])])
    buf.write(f"# eos_rate {agg['eos_rate']:.6f}\n")
    buf.write(f"# incomplete_rate {_fmt(agg['incomplete_rate'])}\n")
    buf.write("# histogram " + json.dumps([list(p) for p in report.histogram]) + "\n")
    if report.diagnostics:
        buf.write("# diagnostics " + json.dumps(report.diagnostics, sort_keys=True) + "\n")
    return buf.getvalue()


def histogram_csv(report: MetricReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["length", "count"])
    w.writerows(report.histogram)
    return buf.getvalue()

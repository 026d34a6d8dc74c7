"""Length, EOS-rate and truncation statistics over caption records."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field

from ..errors import InputError

_WORD_RE = re.compile(r"[a-z]+|[?.!,]")


@dataclass(frozen=True)
class CaptionRecord:
    video_id: str
    prompt: str
    text: str
    length: int
    terminated: bool
    decode: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.length == 0) != (self.text == ""):
            raise ValueError(f"{self.video_id}: length {self.length} inconsistent with text {self.text!r}")
        if "<" not in self.text and len(_WORD_RE.findall(self.text.lower())) != self.length:
            raise ValueError(f"{self.video_id}: text {self.text!r} does not have {self.length} tokens")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LengthStats:
    mean_length: float
    eos_rate: float
    histogram: list[tuple[int, int]]


def length_and_eos_stats(records, bin_width: int = 1) -> LengthStats:
    """Mean token length, percent of empty captions, and a length histogram.

    Histogram bins are ``(bin_start, count)`` pairs covering 0..max length.
    """
    records = list(records)
    if not records:
        raise InputError("length statistics need at least one record")
    if bin_width < 1:
        raise InputError("bin_width must be >= 1")
    lengths = [r.length for r in records]
    n = len(lengths)
    empty = sum(1 for x in lengths if x == 0)
    counts: dict[int, int] = {}
    for x in lengths:
        b = (x // bin_width) * bin_width
        counts[b] = counts.get(b, 0) + 1
    top = max(counts)
    hist = [(b, counts.get(b, 0)) for b in range(0, top + 1, bin_width)]
    return LengthStats(mean_length=sum(lengths) / n, eos_rate=100.0 * empty / n, histogram=hist)


def incomplete_rate(records) -> float:
    """Percent of non-empty captions whose last character is a letter."""
    texts = [r.text if isinstance(r, CaptionRecord) else str(r) for r in records]
    texts = [t for t in texts if t.strip()]
    if not texts:
        raise InputError("incomplete_rate: every caption is empty")
    hits = sum(1 for t in texts if t.rstrip()[-1].isalpha())
    return 100.0 * hits / len(texts)

"""Caption-to-reference scores: sentence BLEU and bag-of-token cosine."""

from __future__ import annotations

import math
import re
from collections import Counter

from ..captioner.vocab import BOS, EOS, PAD, TokenSeq
from ..errors import InputError

_WORD_RE = re.compile(r"[a-z]+|[?.!,]")
_SPECIAL_IDS = {PAD, BOS, EOS}
_SPECIAL_WORDS = {"<pad>", "<bos>", "<eos>"}


def as_tokens(seq) -> list:
    """Normalise text, a TokenSeq, or an id/word list to a token list without specials."""
    if isinstance(seq, str):
        return _WORD_RE.findall(seq.lower())
    if isinstance(seq, TokenSeq):
        seq = seq.tokens
    out = []
    for t in seq:
        if isinstance(t, str):
            if t not in _SPECIAL_WORDS:
                out.append(t)
        elif int(t) not in _SPECIAL_IDS:
            out.append(int(t))
    return out


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate, reference, max_n: int = 4) -> float:
    """Single-pair BLEU with add-one smoothing on orders above one.

    Unigram precision is unsmoothed, so a candidate sharing no word with the
    reference scores 0. The brevity penalty applies when the candidate is
    shorter than the reference.
    """
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    if not ref:
        raise InputError("bleu: reference is empty")
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        c_counts = _ngrams(cand, n)
        r_counts = _ngrams(ref, n)
        matches = sum(min(c, r_counts[g]) for g, c in c_counts.items())
        total = max(len(cand) - n + 1, 0)
        if n == 1:
            if matches == 0:
                return 0.0
            p = matches / total
        else:
            p = (matches + 1) / (total + 1)
        log_sum += math.log(p)
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return min(1.0, bp * math.exp(log_sum / max_n))


def caption_similarity(candidate, reference) -> float:
    """Cosine similarity of token-count vectors; 0 when either side is empty."""
    a = Counter(as_tokens(candidate))
    b = Counter(as_tokens(reference))
    if not a or not b:
        return 0.0
    dot = sum(v * b[k] for k, v in a.items())
    if dot == 0:
        return 0.0
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return min(1.0, dot / (na * nb))

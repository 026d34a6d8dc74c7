"""Model-level operations: g, h, f_i, decoding and the autoregressive loss."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import tensorcore as tc
from ..errors import ConfigError, LengthError, TokenIndexError
from ..tensorcore import Tensor, no_grad
from .model import CaptionerModel, decode_batch, encode_batch, head
from .vocab import EOS, TokenSeq


@dataclass(frozen=True)
class DecodeConfig:
    mode: str = "greedy"
    temperature: float = 1.0
    top_p: float = 1.0
    beam_width: int = 1
    max_new_tokens: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("greedy", "sample", "beam"):
            raise ConfigError(f"unknown decode mode {self.mode!r}")
        if self.max_new_tokens < 1:
            raise ConfigError("max_new_tokens must be >= 1")
        if self.mode == "sample" and self.temperature <= 0:
            raise ConfigError("temperature must be > 0 when sampling")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError("top_p must lie in (0, 1]")
        if self.beam_width < 1:
            raise ConfigError("beam_width must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


GREEDY = DecodeConfig()


def _P(model, params):
    return model.constants() if params is None else params


def prompt_ids(model: CaptionerModel, prompt) -> list[int]:
    ids = model.vocab.encode_prompt(prompt)
    _check_ids(model, ids)
    return ids


def _check_ids(model, ids):
    v = model.config.vocab_size
    for i in ids:
        if not 0 <= int(i) < v:
            raise TokenIndexError(f"token id {i} outside vocabulary of {v}")


def encode_video(model: CaptionerModel, video, params=None) -> Tensor:
    """g(x): one d-dimensional visual token per frame, shape (F, d)."""
    vis = encode_batch(model.config, _P(model, params), video)
    return vis.reshape(vis.shape[1:])


def llm_hidden(model: CaptionerModel, video, prompt, params=None, visual=None) -> Tensor:
    """h(x, c_in): final-layer states at the visual and prompt positions, (F + Lp, d)."""
    P = _P(model, params)
    ids = prompt_ids(model, prompt)
    if visual is None:
        visual = encode_batch(model.config, P, video)
    hid = decode_batch(model.config, P, visual, ids)
    return hid.reshape(hid.shape[1:])


def position_logits(model: CaptionerModel, video, prompt, continuation=(), params=None,
                    visual=None, prompt_offset=None, n_positions=None) -> Tensor:
    """Logits predicting ``continuation`` tokens (and one more), shape (n, V).

    Row ``j`` is the distribution over the token that follows
    ``prompt + continuation[:j]``. By default ``len(continuation) + 1`` rows
    are returned; ``n_positions`` truncates that.
    """
    P = _P(model, params)
    ids = prompt_ids(model, prompt)
    cont = [int(t) for t in continuation]
    _check_ids(model, cont)
    n = len(cont) + 1 if n_positions is None else n_positions
    if not 1 <= n <= len(cont) + 1:
        raise ValueError(f"n_positions {n} outside [1, {len(cont) + 1}]")
    tokens = ids + cont[: n - 1]
    if visual is None:
        visual = encode_batch(model.config, P, video)
    hid = decode_batch(model.config, P, visual, tokens, prompt_offset=prompt_offset)
    start = visual.shape[1] + len(ids) - 1
    rows = hid[0, start:start + n]
    return head(P, rows)


def next_token_distribution(model: CaptionerModel, video, prompt, prefix=(), params=None) -> Tensor:
    """f_i: probability vector over the vocabulary after ``prompt + prefix``."""
    logits = position_logits(model, video, prompt, prefix, params=params)
    return tc.softmax(logits[-1], axis=-1)


def autoregressive_loss(model: CaptionerModel, video, prompt, target, params=None,
                        visual=None) -> Tensor:
    """Teacher-forced mean cross-entropy of ``target`` followed by EOS."""
    tokens = list(target.tokens if isinstance(target, TokenSeq) else target)
    if not tokens:
        raise ValueError("autoregressive_loss needs a non-empty target")
    logits = position_logits(model, video, prompt, tokens, params=params, visual=visual)
    return tc.cross_entropy(logits, tokens + [EOS])


# -- decoding -------------------------------------------------------------------

def _room(model, n_prompt):
    return model.config.max_len - model.config.frames - n_prompt


def _next_logits(model, P, visual, tokens):
    hid = decode_batch(model.config, P, visual, tokens)
    return head(P, hid[:, -1]).data.astype(np.float64)


def generate(model: CaptionerModel, video, prompt, config: DecodeConfig = GREEDY,
             params=None) -> TokenSeq:
    """Decode a caption; stops at the first EOS or after ``max_new_tokens``."""
    P = _P(model, params)
    ids = prompt_ids(model, prompt)
    budget = min(config.max_new_tokens, _room(model, len(ids)) + 1)
    if budget < 1:
        raise LengthError("prompt leaves no room for generated tokens")
    with no_grad():
        visual = encode_batch(model.config, P, video)
        if config.mode == "beam" and config.beam_width > 1:
            return _beam(model, P, visual, ids, budget, config.beam_width)
        rng = np.random.default_rng(config.seed)
        out: list[int] = []
        for _ in range(budget):
            logits = _next_logits(model, P, visual, ids + out)[0]
            tok = _choose(logits, config, rng)
            if tok == EOS:
                return TokenSeq(tuple(out), True)
            out.append(tok)
        return TokenSeq(tuple(out), False)


def _choose(logits, config, rng) -> int:
    if config.mode != "sample":
        return int(np.argmax(logits))
    z = logits / config.temperature
    z = z - z.max()
    p = np.exp(z)
    p /= p.sum()
    if config.top_p < 1.0:
        order = np.argsort(-p, kind="stable")
        csum = np.cumsum(p[order])
        keep = order[: int(np.searchsorted(csum, config.top_p) + 1)]
        mask = np.zeros_like(p)
        mask[keep] = p[keep]
        p = mask / mask.sum()
    return int(rng.choice(len(p), p=p))


def _beam(model, P, visual, ids, budget, width) -> TokenSeq:
    beams = [(0.0, [])]
    finished = []
    for step in range(budget):
        rows = [ids + seq for _, seq in beams]
        vis = Tensor(np.repeat(visual.data, len(rows), axis=0))
        logits = _next_logits(model, P, vis, rows)
        logp = logits - logits.max(axis=1, keepdims=True)
        logp -= np.log(np.exp(logp).sum(axis=1, keepdims=True))
        cands = []
        for (score, seq), lp in zip(beams, logp):
            for tok in np.argsort(-lp, kind="stable")[:width]:
                cands.append((score + float(lp[tok]), seq + [int(tok)]))
        cands.sort(key=lambda c: -c[0])
        beams = []
        for score, seq in cands:
            if seq[-1] == EOS:
                finished.append((score, seq[:-1], True))
            else:
                beams.append((score, seq))
            if len(beams) == width:
                break
        if not beams or (finished and max(f[0] for f in finished) >= beams[0][0]):
            break
    finished.extend((s, q, False) for s, q in beams)
    score, seq, term = max(finished, key=lambda f: f[0])
    return TokenSeq(tuple(seq), term)


def caption(model: CaptionerModel, video, prompt, config: DecodeConfig = GREEDY) -> str:
    return model.vocab.decode(generate(model, video, prompt, config).tokens)

"""The four protective objectives.

Rambling-F, Rambling-L and Mute-S are maximised; Mute-N is expressed as the
cross-entropy of EOS at the first answer position and minimised.
"""

from __future__ import annotations

import numpy as np

from .. import tensorcore as tc
from ..captioner.api import (
    GREEDY,
    autoregressive_loss,
    encode_video,
    generate,
    llm_hidden,
    position_logits,
)
from ..captioner.model import CaptionerModel, decode_batch, encode_batch
from ..captioner.vocab import EOS, TokenSeq
from ..errors import ContractError
from ..tensorcore import Tensor, no_grad


def _tokens(seq) -> list[int]:
    return list(seq.tokens if isinstance(seq, TokenSeq) else seq)


class CleanFeatures:
    """g(x) and h(x, c_in) of the unperturbed video, computed once."""

    def __init__(self, model: CaptionerModel, x, prompt):
        with no_grad():
            self.video = encode_video(model, x)
            self.llm = llm_hidden(model, x, prompt)


def rambling_f_terms(model: CaptionerModel, x_adv, clean: CleanFeatures, prompt,
                     need_video=True, need_llm=True):
    """(video-feature MSE, LLM-feature MSE); a term not needed is returned as None."""
    P = model.constants()
    visual = encode_batch(model.config, P, x_adv)
    vid = tc.mse(visual.reshape(visual.shape[1:]), clean.video) if need_video else None
    llm = None
    if need_llm:
        ids = model.vocab.encode_prompt(prompt)
        hid = decode_batch(model.config, P, visual, ids)
        llm = tc.mse(hid.reshape(hid.shape[1:]), clean.llm)
    return vid, llm


def loss_rambling_f(model: CaptionerModel, x_adv, x_clean=None, prompt=None, alpha=1.0, beta=1.0,
                    clean: CleanFeatures | None = None) -> Tensor:
    """alpha * MSE(g(x'), g(x)) + beta * MSE(h(x', c), h(x, c))."""
    if clean is None:
        clean = CleanFeatures(model, x_clean, prompt)
    vid, llm = rambling_f_terms(model, x_adv, clean, prompt, alpha > 0, beta > 0)
    if clean.video.shape != (model.config.frames, model.config.d_model):
        raise ContractError("clean and adversarial feature shapes differ")
    total = None
    if vid is not None:
        total = tc.scale(vid, alpha)
    if llm is not None:
        term = tc.scale(llm, beta)
        total = term if total is None else total + term
    return total


def loss_rambling_l(model: CaptionerModel, x_adv, prompt, y_clean) -> Tensor:
    """L_ar of the clean caption under the adversarial video (to be increased)."""
    tokens = _tokens(y_clean)
    if not tokens:
        raise ContractError("Rambling-L needs a non-empty clean caption")
    return autoregressive_loss(model, x_adv, prompt, tokens)


def loss_mute_s(model: CaptionerModel, x_adv, prompt, y_out=None) -> Tensor:
    """Mean EOS probability over the positions that produced ``y_out``.

    ``y_out`` defaults to the greedy caption of ``x_adv``; an empty caption
    scores the first answer position alone.
    """
    if y_out is None:
        y_out = generate(model, tc.as_tensor(x_adv).data, prompt, GREEDY)
    tokens = _tokens(y_out)
    n = max(len(tokens), 1)
    logits = position_logits(model, x_adv, prompt, tokens, n_positions=n)
    probs = tc.softmax(logits, axis=-1)
    return tc.mean(tc.pick(probs, np.full(n, EOS)))


def loss_mute_n(model: CaptionerModel, x_adv, prompt, prompt_offset=None) -> Tensor:
    """-log p(EOS) at the first answer position (minimised)."""
    logits = position_logits(model, x_adv, prompt, (), prompt_offset=prompt_offset, n_positions=1)
    logp = tc.log_softmax(logits, axis=-1)
    return tc.scale(tc.pick(logp, np.array([EOS])).reshape(()), -1.0)

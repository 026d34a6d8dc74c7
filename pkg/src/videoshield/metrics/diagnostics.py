"""Mechanism diagnostics: feature shifts and predictive entropy."""

from __future__ import annotations

import numpy as np

from ..attacks.losses import CleanFeatures, rambling_f_terms
from ..captioner.api import GREEDY, generate, position_logits
from ..captioner.vocab import EOS
from ..tensorcore import no_grad


def predictive_entropy(model, video, prompt, caption_tokens) -> float:
    """Mean Shannon entropy (nats) of f_i over the teacher-forced caption positions."""
    with no_grad():
        logits = position_logits(model, video, prompt, list(caption_tokens)).data.astype(np.float64)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(np.mean(-(np.exp(logp) * logp).sum(axis=1)))


def diagnostics(model, x, x_adv, prompt, y_clean=None) -> dict:
    """Video- and LLM-feature mean-squared shifts plus entropy on ``x_adv``.

    The shifts are the two Rambling-F terms evaluated separately. Entropy is
    taken at the positions of the clean greedy caption (and its closing EOS).
    """
    clean = CleanFeatures(model, x, prompt)
    with no_grad():
        vid, llm = rambling_f_terms(model, np.asarray(x_adv, dtype=np.float32), clean, prompt)
    if y_clean is None:
        y_clean = generate(model, x, prompt, GREEDY).tokens
    tokens = [t for t in y_clean if t != EOS]
    return {
        "video_feature_shift": vid.item(),
        "llm_feature_shift": llm.item(),
        "entropy": predictive_entropy(model, x_adv, prompt, tokens),
    }

"""Mute-N with joint adversarial prompt-embedding training.

A perturbation on the prompt token embeddings is trained to *resist* the
attack (it ascends the EOS cross-entropy) while the video perturbation
descends it, so the video watermark has to work under shifted prompts.
Only the video perturbation leaves this module.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..captioner.model import CaptionerModel
from ..errors import AttackError, NumericError
from ..tensorcore import Tape, Tensor, backward
from .config import AttackConfig, AttackResult
from .losses import loss_mute_n
from .projection import apply_perturbation, project_linf
from .transforms import apply_transform_pipeline


def joint_step(model, x_adv, offset, config):
    """Loss and gradients w.r.t. the video and the prompt offset."""
    with Tape() as tape:
        vx = tape.watch(x_adv)
        vo = tape.watch(offset)
        loss = loss_mute_n(model, apply_transform_pipeline(vx, config.transforms), config.prompt,
                           prompt_offset=vo)
    gx, go = backward(tape, loss, [vx, vo])
    return loss.item(), gx.data, go.data


def mute_n2_joint(model: CaptionerModel, x, config: AttackConfig, prompt_train_set=None) -> AttackResult:
    prompts = list(prompt_train_set or [config.prompt])
    if not prompts:
        raise AttackError("mute_n2 needs at least one training prompt")
    x = np.asarray(x, dtype=np.float32)
    t0 = time.perf_counter()
    offsets = {p: np.zeros((len(model.vocab.encode_prompt(p)), model.config.d_model), np.float32)
               for p in prompts}
    delta = np.zeros(x.shape, dtype=np.float64)
    adv = x.copy()
    losses = []
    early = False
    threshold = config.stop_threshold
    for it in range(config.n_iterations):
        prompt = prompts[it % len(prompts)]
        cfg = config.with_(prompt=prompt)
        try:
            loss, gx, go = joint_step(model, adv, offsets[prompt], cfg)
        except NumericError as exc:
            raise AttackError(f"mute_n2: numeric failure at iteration {it}: {exc}") from exc
        if not math.isfinite(loss):
            raise AttackError(f"mute_n2: non-finite loss at iteration {it}")
        losses.append(loss)
        if threshold is not None and loss < threshold:
            early = True
            break
        delta = project_linf(x, delta - config.step_size * np.sign(gx), config.epsilon)
        adv = apply_perturbation(x, delta)
        offsets[prompt] = (offsets[prompt] + config.prompt_step * np.sign(go)).astype(np.float32)

    final = loss_mute_n(model, apply_transform_pipeline(Tensor(adv), config.transforms), config.prompt)
    return AttackResult(
        adversarial=adv,
        losses=losses,
        iterations=len(losses),
        early_stopped=early,
        elapsed=time.perf_counter() - t0,
        config=config,
        final_loss=final.item(),
        extras={"prompt_offset_linf": float(max(np.abs(o).max() for o in offsets.values()))},
    )

"""Signed-gradient PGD under an l-infinity budget."""

from __future__ import annotations

import logging
import math
import time

import numpy as np

from ..captioner.api import GREEDY, generate
from ..captioner.model import CaptionerModel
from ..errors import AttackError, NumericError
from ..tensorcore import Tape, Tensor, backward, no_grad
from .config import AttackConfig, AttackResult
from .losses import CleanFeatures, loss_mute_n, loss_mute_s, loss_rambling_f, loss_rambling_l
from .projection import apply_perturbation, project_linf, random_noise_baseline
from .transforms import apply_transform_pipeline, transform_video

log = logging.getLogger(__name__)

STAGNATION_WINDOW = 10


class Objective:
    """Binds a method to its frozen clean references.

    ``prepare(x_adv)`` runs the per-iteration non-differentiable work (Mute-S
    regenerates its caption there) and reports whether to stop early;
    ``__call__`` builds the differentiable loss on the transformed input.
    """

    def __init__(self, model: CaptionerModel, x: np.ndarray, config: AttackConfig):
        self.model = model
        self.config = config
        self.method = config.method
        self.y_out = None
        seen = transform_video(x, config.transforms)
        if self.method == "rambling_f":
            self.clean = CleanFeatures(model, seen, config.prompt)
        elif self.method == "rambling_l":
            self.y_clean = generate(model, seen, config.prompt, GREEDY)
            if len(self.y_clean) == 0:
                raise AttackError("Rambling-L: the clean video already yields an empty caption")

    def prepare(self, x_adv: np.ndarray) -> bool:
        if self.method != "mute_s":
            return False
        seen = transform_video(x_adv, self.config.transforms)
        self.y_out = generate(self.model, seen, self.config.prompt, GREEDY)
        limit = self.config.stop_threshold
        return limit is not None and len(self.y_out) <= limit

    def __call__(self, x_in) -> Tensor:
        cfg = self.config
        if self.method == "rambling_f":
            return loss_rambling_f(self.model, x_in, prompt=cfg.prompt, alpha=cfg.alpha,
                                   beta=cfg.beta, clean=self.clean)
        if self.method == "rambling_l":
            return loss_rambling_l(self.model, x_in, cfg.prompt, self.y_clean)
        if self.method == "mute_s":
            return loss_mute_s(self.model, x_in, cfg.prompt, self.y_out)
        return loss_mute_n(self.model, x_in, cfg.prompt)

    def value(self, x_adv: np.ndarray) -> float:
        self.prepare(x_adv)
        with no_grad():
            return self(transform_video_tensor(x_adv, self.config.transforms)).item()

    def done(self, loss: float) -> bool:
        limit = self.config.stop_threshold
        return self.method == "mute_n" and limit is not None and loss < limit


def transform_video_tensor(x_adv, transforms) -> Tensor:
    return apply_transform_pipeline(Tensor(x_adv), transforms)


def loss_and_grad(objective: Objective, x_adv: np.ndarray):
    with Tape() as tape:
        leaf = tape.watch(x_adv)
        loss = objective(apply_transform_pipeline(leaf, objective.config.transforms))
    (g,) = backward(tape, loss, [leaf])
    return loss.item(), g.data


def pgd_attack(model: CaptionerModel, x, config: AttackConfig) -> AttackResult:
    """Run the configured protective attack on one (F, H, W, C) video.

    The perturbation starts at zero. Each iteration evaluates the loss at the
    current adversarial video (optionally through the transform pipeline),
    takes a signed step of ``step_size`` in the improving direction, and
    projects back onto the budget.
    """
    x = np.asarray(x, dtype=np.float32)
    t0 = time.perf_counter()
    if config.method == "noise":
        adv = random_noise_baseline(x, config.epsilon, config.seed)
        return AttackResult(adv, [], 0, False, time.perf_counter() - t0, config)
    if config.method == "mute_n2":
        from .mute_n2 import mute_n2_joint

        return mute_n2_joint(model, x, config)

    objective = Objective(model, x, config)
    sign = 1.0 if config.ascending else -1.0
    delta = np.zeros(x.shape, dtype=np.float64)
    adv = x.copy()
    losses: list[float] = []
    early = False
    zero_run = 0
    stagnated = False
    rng = np.random.default_rng(config.seed)
    for it in range(config.n_iterations):
        if objective.prepare(adv):
            early = True
            break
        try:
            loss, grad = loss_and_grad(objective, adv)
        except NumericError as exc:
            raise AttackError(f"{config.method}: numeric failure at iteration {it}: {exc}") from exc
        if not math.isfinite(loss):
            raise AttackError(f"{config.method}: non-finite loss at iteration {it}")
        losses.append(loss)
        if objective.done(loss):
            early = True
            break
        if not np.any(grad) and config.method == "rambling_f":
            # the feature distance sits at its minimum (zero gradient) when
            # x' = x, so a zero start would never move; take a seeded random
            # sign step instead
            grad = rng.choice([-1.0, 1.0], size=grad.shape)
        if not np.any(grad):
            zero_run += 1
            if zero_run >= STAGNATION_WINDOW and not stagnated:
                stagnated = True
                log.warning("%s: zero gradient for %d iterations", config.method, zero_run)
        else:
            zero_run = 0
        delta = project_linf(x, delta + sign * config.step_size * np.sign(grad), config.epsilon)
        adv = apply_perturbation(x, delta)

    final = objective.value(adv)
    return AttackResult(
        adversarial=adv,
        losses=losses,
        iterations=len(losses),
        early_stopped=early,
        elapsed=time.perf_counter() - t0,
        config=config,
        final_loss=final,
        stagnated=stagnated,
    )

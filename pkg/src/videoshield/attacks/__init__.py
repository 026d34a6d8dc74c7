"""Protective PGD attacks: Rambling-F/L, Mute-S/N, Mute-N2, noise baseline."""

from .config import (
    DEFAULT_EARLY_STOP,
    DEFAULT_EPSILON,
    DEFAULT_ITERATIONS,
    DEFAULT_STEP,
    METHODS,
    AttackConfig,
    AttackResult,
    Transform,
)
from .losses import CleanFeatures, loss_mute_n, loss_mute_s, loss_rambling_f, loss_rambling_l, rambling_f_terms
from .manifest import content_hash, dumps_manifest, result_manifest
from .mute_n2 import mute_n2_joint
from .pgd import Objective, pgd_attack
from .projection import apply_perturbation, project_linf, random_noise_baseline
from .transforms import apply_transform_pipeline, transform_video

__all__ = [
    "AttackConfig", "AttackResult", "CleanFeatures", "DEFAULT_EARLY_STOP", "DEFAULT_EPSILON",
    "DEFAULT_ITERATIONS", "DEFAULT_STEP", "METHODS", "Objective", "Transform",
    "apply_perturbation", "apply_transform_pipeline", "content_hash", "dumps_manifest",
    "loss_mute_n", "loss_mute_s", "loss_rambling_f", "loss_rambling_l", "mute_n2_joint",
    "pgd_attack", "project_linf", "rambling_f_terms", "random_noise_baseline",
    "result_manifest", "transform_video",
]

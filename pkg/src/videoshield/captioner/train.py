"""Teacher-forced training of the captioner with Adam."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import tensorcore as tc
from ..errors import ConfigError, NumericError, TrainingError
from ..tensorcore import Tape, Tensor, backward
from .model import CaptionerModel, ModelConfig, decode_batch, encode_batch, head
from .vocab import EOS, PAD, TRAIN_PROMPTS, Vocabulary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 3e-3
    epochs: int = 30
    batch_size: int = 32
    warmup_steps: int = 100
    clip_norm: float = 1.0
    noise_amplitude: float = 16.0 / 255.0
    aux_weight: float = 1.0
    label_smoothing: float = 0.1
    prompts: tuple[str, ...] = TRAIN_PROMPTS

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.aux_weight < 0:
            raise ConfigError("aux_weight must be >= 0")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError("label_smoothing must be in [0, 1)")
        if not self.prompts:
            raise ConfigError("at least one training prompt is required")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["prompts"] = list(self.prompts)
        return d


@dataclass
class TrainingLog:
    epoch_loss: list[float] = field(default_factory=list)
    steps: int = 0


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            upd = lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
            params[k] = (params[k] - upd).astype(np.float32)


def batch_arrays(vocab: Vocabulary, captions, prompt: str):
    """Token inputs and aligned targets for one batch sharing ``prompt``.

    Targets cover only the caption tokens and the closing EOS; prompt and
    padding positions carry the ignore index.
    """
    p_ids = vocab.encode_prompt(prompt)
    caps = [vocab.encode(c) for c in captions]
    width = max(len(c) for c in caps)
    n = len(caps)
    inputs = np.full((n, len(p_ids) + width), PAD, dtype=np.int64)
    targets = np.full((n, len(p_ids) + width), tc.IGNORE_INDEX, dtype=np.int64)
    for i, c in enumerate(caps):
        inputs[i, : len(p_ids)] = p_ids
        inputs[i, len(p_ids): len(p_ids) + len(c)] = c
        seq = c + [EOS]
        start = len(p_ids) - 1
        targets[i, start: start + len(seq)] = seq
    return inputs, targets


def word_targets(vocab: Vocabulary, captions) -> np.ndarray:
    """Distinct caption word ids per row, right-padded with the ignore index."""
    bags = [sorted(set(vocab.encode(c))) for c in captions]
    out = np.full((len(bags), max(len(b) for b in bags)), tc.IGNORE_INDEX, dtype=np.int64)
    for i, b in enumerate(bags):
        out[i, : len(b)] = b
    return out


def init_aux(cfg: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Training-only linear head from the flattened visual tokens to word logits."""
    rng = np.random.default_rng(seed + 2)
    fan_in = cfg.frames * cfg.d_model
    return {
        "aux.w": rng.normal(0.0, fan_in ** -0.5, (fan_in, cfg.vocab_size)).astype(np.float32),
        "aux.b": np.zeros(cfg.vocab_size, dtype=np.float32),
    }


def batch_loss(model: CaptionerModel, P, videos, inputs, targets, words=None,
               aux_weight: float = 0.0, label_smoothing: float = 0.0) -> Tensor:
    cfg = model.config
    visual = encode_batch(cfg, P, videos)
    hid = decode_batch(cfg, P, visual, inputs)
    logits = head(P, hid[:, cfg.frames:])
    loss = tc.cross_entropy(logits, targets)
    if label_smoothing > 0.0:
        keep = (targets != tc.IGNORE_INDEX).astype(logits.dtype)
        uniform = tc.mean(tc.log_softmax(logits, axis=-1), axis=-1)
        spread = tc.scale(tc.sum(tc.mul(uniform, keep / keep.sum())), -1.0)
        loss = loss * (1.0 - label_smoothing) + spread * label_smoothing
    if words is None or aux_weight == 0.0:
        return loss
    # bag-of-words loss straight off the visual tokens; the caption loss alone
    # reaches the encoder only through attention and never builds motion features
    flat = visual.reshape(visual.shape[0], cfg.frames * cfg.d_model)
    aux_logits = tc.matmul(flat, P["aux.w"]) + P["aux.b"]
    n = words.shape[1]
    rep = tc.concat([aux_logits.reshape(-1, 1, cfg.vocab_size)] * n, axis=1)
    return loss + tc.cross_entropy(rep, words) * aux_weight


def _lr_at(step, total, cfg: TrainConfig):
    if step < cfg.warmup_steps:
        return cfg.lr * (step + 1) / cfg.warmup_steps
    frac = (step - cfg.warmup_steps) / max(1, total - cfg.warmup_steps)
    return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * min(frac, 1.0)))


def train_captioner(samples, hyper: TrainConfig | None = None, seed: int = 0,
                    model_config: ModelConfig | None = None, progress=None):
    """Train a fresh captioner on ``samples`` (objects with ``video`` and ``caption``).

    Returns ``(model, TrainingLog)``. A fixed seed gives bit-identical
    parameters.
    """
    hyper = hyper or TrainConfig()
    samples = list(samples)
    if not samples:
        raise ConfigError("training corpus is empty")
    vocab = Vocabulary.default()
    cfg = model_config or ModelConfig(vocab_size=len(vocab))
    model = CaptionerModel.initialize(cfg, vocab, seed=seed)
    rng = np.random.default_rng(seed + 1)
    params = {k: v.copy() for k, v in model.params.items()}
    use_aux = hyper.aux_weight > 0
    if use_aux:
        params.update(init_aux(cfg, seed))
    opt = Adam(params, hyper.lr)
    videos = np.stack([s.video for s in samples]).astype(np.float32)
    captions = [s.caption for s in samples]
    steps_per_epoch = math.ceil(len(samples) / hyper.batch_size)
    total = steps_per_epoch * hyper.epochs
    tlog = TrainingLog()

    for epoch in range(hyper.epochs):
        order = rng.permutation(len(samples))
        losses = []
        for s in range(steps_per_epoch):
            idx = order[s * hyper.batch_size:(s + 1) * hyper.batch_size]
            prompt = hyper.prompts[int(rng.integers(len(hyper.prompts)))]
            inputs, targets = batch_arrays(vocab, [captions[i] for i in idx], prompt)
            vids = videos[idx]
            words = word_targets(vocab, [captions[i] for i in idx]) if use_aux else None
            if hyper.noise_amplitude > 0:
                amp = rng.uniform(0.0, hyper.noise_amplitude, size=(len(idx), 1, 1, 1, 1))
                noise = rng.uniform(-1.0, 1.0, size=vids.shape) * amp
                vids = np.clip(vids + noise, 0.0, 1.0).astype(np.float32)
            try:
                with Tape() as tape:
                    P = {k: tape.watch(v, name=k) for k, v in params.items()}
                    loss = batch_loss(model, P, vids, inputs, targets, words, hyper.aux_weight,
                                      hyper.label_smoothing)
                names = list(P)
                grads = backward(tape, loss, [P[k] for k in names])
            except NumericError as exc:
                raise TrainingError(f"training diverged in epoch {epoch}: {exc}") from exc
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingError(f"training diverged in epoch {epoch}: loss {value}")
            g = {k: gr.data for k, gr in zip(names, grads)}
            norm = math.sqrt(sum(float(np.sum(x.astype(np.float64) ** 2)) for x in g.values()))
            if hyper.clip_norm and norm > hyper.clip_norm:
                g = {k: (x * (hyper.clip_norm / norm)).astype(np.float32) for k, x in g.items()}
            opt.step(params, g, _lr_at(tlog.steps, total, hyper))
            tlog.steps += 1
            losses.append(value)
        tlog.epoch_loss.append(float(np.mean(losses)))
        log.info("epoch %d loss %.4f", epoch, tlog.epoch_loss[-1])
        if progress is not None:
            progress(epoch, tlog.epoch_loss[-1])
    model.set_params({k: v for k, v in params.items() if not k.startswith("aux.")})
    return model, tlog

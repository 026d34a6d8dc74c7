"""Run configuration: defaults, key=value files, and flag overrides."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction

from .. import __version__
from ..attacks.config import DEFAULT_EPSILON, DEFAULT_STEP, AttackConfig
from ..captioner.api import DecodeConfig
from ..captioner.train import TrainConfig
from ..captioner.vocab import DEFAULT_PROMPT
from ..errors import ConfigError, IOFormatError

OUTPUT_ENV = "VIDEOSHIELD_OUTPUT"
DEFAULT_OUTPUT = "videoshield-out"
SWEEP_AXES = ("epsilon", "alpha_beta_grid", "iterations")


@dataclass(frozen=True)
class RunConfig:
    command: str = ""
    # paths
    checkpoint: str = ""
    checkpoint_b: str = ""
    data: str = ""
    output: str = ""
    # corpus / training
    n_samples: int = 2000
    split_ratio: float = 0.9
    epochs: int = 30
    lr: float = 3e-3
    batch_size: int = 32
    # attack
    method: str = "rambling_l"
    epsilon: float = DEFAULT_EPSILON
    step_size: float = DEFAULT_STEP
    iterations: int | None = None
    alpha: float = 1.0
    beta: float = 1.0
    early_stop: float | None = None
    prompt: str = DEFAULT_PROMPT
    transforms: tuple[str, ...] = ()
    # decoding
    decode_mode: str = "greedy"
    temperature: float = 1.0
    top_p: float = 1.0
    beam_width: int = 1
    max_new_tokens: int = 16
    # evaluation / sweeps
    eval_prompts: tuple[str, ...] = ()
    eval_transformed: bool = False
    sweep_axis: str = "epsilon"
    sweep_values: tuple[str, ...] = ()
    limit: int | None = None
    seed: int = 0
    jobs: int = 1

    def attack_config(self, **changes) -> AttackConfig:
        base = dict(method=self.method, epsilon=self.epsilon, step_size=self.step_size,
                    iterations=self.iterations, alpha=self.alpha, beta=self.beta,
                    early_stop=self.early_stop, prompt=self.prompt,
                    transforms=tuple(self.transforms), seed=self.seed)
        base.update(changes)
        return AttackConfig(**base)

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(mode=self.decode_mode, temperature=self.temperature, top_p=self.top_p,
                            beam_width=self.beam_width, max_new_tokens=self.max_new_tokens,
                            seed=self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, epochs=self.epochs, batch_size=self.batch_size)

    def output_dir(self) -> str:
        return self.output or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        d["output"] = self.output_dir()
        d["version"] = __version__
        return d

    def validate(self) -> "RunConfig":
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.limit is not None and self.limit < 1:
            raise ConfigError("limit must be >= 1")
        if self.n_samples < 10:
            raise ConfigError("n_samples must be >= 10")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
        self.decode_config()
        self.train_config()
        return self


FIELD_TYPES = {f.name: f for f in fields(RunConfig)}
_LIST_KEYS = {"transforms", "eval_prompts", "sweep_values"}
_OPTIONAL = {"iterations", "early_stop", "limit"}


def parse_number(text: str) -> float:
    """Float or fraction literal, e.g. ``0.5`` or ``16/255``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _split_list(text: str) -> tuple[str, ...]:
    # prompts contain commas and spaces, so lists are separated by '|'
    return tuple(p.strip() for p in text.split("|") if p.strip())


def coerce(key: str, value):
    """Convert a raw string (or already-typed value) to the field's type."""
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(value, str):
        if key in _LIST_KEYS:
            return tuple(value)
        return value
    text = value.strip()
    if key in _OPTIONAL and text.lower() in ("", "none", "default"):
        return None
    if key in _LIST_KEYS:
        return _split_list(text)
    default = FIELD_TYPES[key].default
    if key in ("iterations", "limit"):
        default = 0
    if key == "early_stop":
        default = 0.0
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc
    if isinstance(default, float):
        return parse_number(text)
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{n}: expected key = value")
        if key == "command":
            raise ConfigError(f"{source}:{n}: 'command' cannot be set from a file")
        try:
            out[key] = coerce(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{n}: {exc}") from exc
    return out


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOFormatError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def resolve(command: str, file_values: dict | None = None, flag_values: dict | None = None) -> RunConfig:
    """Defaults, then file values, then flags."""
    cfg = RunConfig(command=command)
    merged = {}
    for layer in (file_values or {}, flag_values or {}):
        for k, v in layer.items():
            merged[k] = coerce(k, v)
    return replace(cfg, **merged).validate()


def dump_config_text(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.to_dict().items():
        if k in ("command", "version"):
            continue
        if isinstance(v, list):
            v = " | ".join(str(x) for x in v)
        lines.append(f"{k} = {'' if v is None else v}")
    return "\n".join(lines) + "\n"

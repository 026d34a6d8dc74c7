"""Attack configuration and result records."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..captioner.vocab import DEFAULT_PROMPT
from ..errors import ConfigError

METHODS = ("rambling_f", "rambling_l", "mute_s", "mute_n", "mute_n2", "noise")
ASCENDING = {"rambling_f", "rambling_l", "mute_s"}

DEFAULT_EPSILON = 16.0 / 255.0
DEFAULT_STEP = 1.0 / 255.0
DEFAULT_ITERATIONS = {"rambling_f": 200, "rambling_l": 200, "mute_s": 500, "mute_n": 500,
                      "mute_n2": 500, "noise": 1}
DEFAULT_EARLY_STOP = {"mute_s": 2.0, "mute_n": 0.3, "mute_n2": 0.3}


@dataclass(frozen=True)
class Transform:
    kind: str
    param: int

    def __post_init__(self):
        if self.kind not in ("resize_down_up", "mean_filter"):
            raise ConfigError(f"unknown transform {self.kind!r}")
        if self.param < 1:
            raise ConfigError(f"{self.kind} parameter must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "Transform":
        kind, _, arg = text.strip().partition(":")
        try:
            return cls(kind, int(arg))
        except ValueError as exc:
            raise ConfigError(f"bad transform {text!r}; expected kind:int") from exc

    def __str__(self) -> str:
        return f"{self.kind}:{self.param}"


@dataclass(frozen=True)
class AttackConfig:
    """One attack run. ``iterations``/``early_stop`` of ``None`` pick the method default.

    ``early_stop`` is a generated-length threshold in tokens for ``mute_s``
    and a loss threshold for ``mute_n``/``mute_n2``.
    """

    method: str = "rambling_l"
    epsilon: float = DEFAULT_EPSILON
    step_size: float = DEFAULT_STEP
    iterations: int | None = None
    alpha: float = 1.0
    beta: float = 1.0
    early_stop: float | None = None
    prompt: str = DEFAULT_PROMPT
    transforms: tuple[Transform, ...] = ()
    seed: int = 0
    prompt_step: float = 1e-2

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.step_size <= 0 or (self.epsilon > 0 and self.step_size > self.epsilon + 1e-12):
            raise ConfigError(f"step_size must satisfy 0 < s <= epsilon, got {self.step_size}")
        if self.iterations is not None and self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be non-negative")
        if self.method == "rambling_f" and self.alpha == 0 and self.beta == 0:
            raise ConfigError("rambling_f needs alpha or beta > 0")
        object.__setattr__(self, "transforms", tuple(
            t if isinstance(t, Transform) else Transform.parse(t) for t in self.transforms
        ))

    @property
    def n_iterations(self) -> int:
        return self.iterations if self.iterations is not None else DEFAULT_ITERATIONS[self.method]

    @property
    def stop_threshold(self) -> float | None:
        return self.early_stop if self.early_stop is not None else DEFAULT_EARLY_STOP.get(self.method)

    @property
    def ascending(self) -> bool:
        return self.method in ASCENDING

    def with_(self, **changes) -> "AttackConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["transforms"] = [str(t) for t in self.transforms]
        d["resolved_iterations"] = self.n_iterations
        d["resolved_early_stop"] = self.stop_threshold
        return d


@dataclass
class AttackResult:
    adversarial: np.ndarray
    losses: list[float]
    iterations: int
    early_stopped: bool
    elapsed: float
    config: AttackConfig
    final_loss: float | None = None
    stagnated: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def method(self) -> str:
        return self.config.method

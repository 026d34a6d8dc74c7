"""Toy video captioner: per-frame vision encoder and a causal decoder.

The vision encoder maps every frame to one visual token. The decoder reads
``[visual tokens | prompt tokens + BOS | generated tokens]`` and predicts
the next token at every position.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import tensorcore as tc
from ..errors import ConfigError, LengthError
from ..tensorcore import Tensor
from .vocab import Vocabulary

NEG_INF = -1e9


@dataclass(frozen=True)
class ModelConfig:
    frames: int = 8
    height: int = 32
    width: int = 32
    channels: int = 3
    patch: int = 4
    window: int = 2
    d_patch: int = 64
    patch_layers: int = 2
    motion: bool = True
    pool_queries: int = 4
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 256
    max_len: int = 48
    vocab_size: int = 64

    def __post_init__(self):
        if self.height % self.patch or self.width % self.patch:
            raise ConfigError("frame size must be a multiple of the patch size")
        if self.d_model % self.n_heads:
            raise ConfigError("d_model must be divisible by n_heads")
        if not 1 <= self.window <= min(self.height, self.width) // self.patch:
            raise ConfigError("window must be between 1 and the patch grid size")
        if self.pool_queries < 0:
            raise ConfigError("pool_queries must be >= 0 (0 means mean pooling)")
        if self.patch_layers < 1:
            raise ConfigError("patch_layers must be >= 1")
        if self.n_layers < 1 or self.max_len <= self.frames:
            raise ConfigError("need at least one layer and room for text after the visual prefix")

    @property
    def grid(self) -> tuple[int, int]:
        return self.height // self.patch, self.width // self.patch

    @property
    def n_patches(self) -> int:
        """Tokens per frame: window positions at a stride of one patch."""
        gh, gw = self.grid
        return (gh - self.window + 1) * (gw - self.window + 1)

    @property
    def patch_dim(self) -> int:
        return self.window * self.window * self.patch * self.patch * self.channels

    @property
    def feature_dim(self) -> int:
        return self.d_patch * (2 if self.motion else 1)

    @property
    def video_shape(self) -> tuple[int, int, int, int]:
        return (self.frames, self.height, self.width, self.channels)

    def to_dict(self) -> dict:
        return asdict(self)


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, ff, v = cfg.d_model, cfg.d_ff, cfg.vocab_size
    shapes = {
        "vis.patch_w": (cfg.patch_dim, cfg.d_patch),
        "vis.patch_b": (cfg.d_patch,),
        "vis.patch_pos": (cfg.n_patches, cfg.d_patch),
    }
    for i in range(1, cfg.patch_layers):
        shapes[f"vis.mlp{i}_w"] = (cfg.d_patch, cfg.d_patch)
        shapes[f"vis.mlp{i}_b"] = (cfg.d_patch,)
    if cfg.motion:
        shapes.update({
            "vis.motion_x": (cfg.patch_dim, cfg.d_patch),
            "vis.motion_d": (cfg.patch_dim, cfg.d_patch),
            "vis.motion_b": (cfg.d_patch,),
        })
    if cfg.pool_queries:
        shapes["vis.pool_q"] = (cfg.feature_dim, cfg.pool_queries)
    shapes.update({
        "vis.proj_w": (max(cfg.pool_queries, 1) * cfg.feature_dim, d),
        "vis.proj_b": (d,),
        "dec.tok_emb": (v, d),
        "dec.pos_emb": (cfg.max_len, d),
    })
    for i in range(cfg.n_layers):
        p = f"layer{i}."
        shapes.update({
            p + "ln1_g": (d,), p + "ln1_b": (d,),
            p + "qkv_w": (d, 3 * d), p + "qkv_b": (3 * d,),
            p + "out_w": (d, d), p + "out_b": (d,),
            p + "ln2_g": (d,), p + "ln2_b": (d,),
            p + "ff_in_w": (d, ff), p + "ff_in_b": (ff,),
            p + "ff_out_w": (ff, d), p + "ff_out_b": (d,),
        })
    shapes.update({
        "dec.lnf_g": (d,), "dec.lnf_b": (d,),
        "dec.head_w": (d, v), "dec.head_b": (v,),
    })
    return shapes


def init_parameters(cfg: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in parameter_shapes(cfg).items():
        leaf = name.split(".")[-1]
        if leaf.endswith("_g"):
            arr = np.ones(shape)
        elif leaf.endswith("_b"):
            arr = np.zeros(shape)
        elif leaf == "patch_pos":
            arr = rng.normal(0.0, 1.0, shape)
        elif leaf in ("patch_w", "motion_x", "motion_d", "pool_q", "proj_w") or (
                leaf.startswith("mlp") and leaf.endswith("_w")):
            arr = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), shape)
        elif leaf in ("tok_emb", "pos_emb"):
            arr = rng.normal(0.0, 0.1, shape)
        elif leaf == "out_w" or leaf == "ff_out_w":
            arr = rng.normal(0.0, 0.02 / np.sqrt(2 * cfg.n_layers), shape)
        else:
            arr = rng.normal(0.0, 0.02, shape)
        params[name] = arr.astype(np.float32)
    return params


class CaptionerModel:
    """Parameters, architecture config, and vocabulary.

    ``params`` holds float32 arrays. Forward functions take a mapping of
    name -> Tensor so training can pass tape leaves while attacks pass
    constants.
    """

    def __init__(self, config: ModelConfig, vocab: Vocabulary, params: dict[str, np.ndarray]):
        if config.vocab_size != len(vocab):
            raise ConfigError(f"config vocab_size {config.vocab_size} != vocabulary size {len(vocab)}")
        expected = parameter_shapes(config)
        if set(params) != set(expected):
            raise ConfigError("parameter names do not match the architecture")
        for k, shape in expected.items():
            if params[k].shape != shape:
                raise ConfigError(f"parameter {k} has shape {params[k].shape}, expected {shape}")
        self.config = config
        self.vocab = vocab
        self.params = {k: np.ascontiguousarray(params[k], dtype=np.float32) for k in expected}
        self._const = None

    @classmethod
    def initialize(cls, config: ModelConfig | None = None, vocab: Vocabulary | None = None,
                   seed: int = 0) -> "CaptionerModel":
        vocab = vocab or Vocabulary.default()
        config = config or ModelConfig(vocab_size=len(vocab))
        return cls(config, vocab, init_parameters(config, seed))

    def constants(self) -> dict[str, Tensor]:
        """Untracked parameter tensors, cached for inference and attacks."""
        if self._const is None:
            self._const = {k: Tensor(v) for k, v in self.params.items()}
        return self._const

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        self.params = {k: np.ascontiguousarray(params[k], dtype=np.float32) for k in self.params}
        self._const = None

    def param_digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for k in sorted(self.params):
            h.update(k.encode())
            h.update(self.params[k].tobytes())
        return h.hexdigest()


# -- forward pieces --------------------------------------------------------------

def _as_video_batch(cfg: ModelConfig, video) -> Tensor:
    v = tc.as_tensor(video)
    if v.ndim == 4:
        v = v.reshape((1,) + v.shape)
    if v.ndim != 5 or v.shape[1:] != cfg.video_shape:
        raise ConfigError(f"video shape {v.shape} does not match model {cfg.video_shape}")
    return v


def encode_batch(cfg: ModelConfig, P: dict[str, Tensor], video) -> Tensor:
    """(B, F, H, W, C) -> (B, F, d) visual tokens.

    Every patch gets an appearance feature (patch embedding plus a learned
    per-patch offset, then GELU layers) and, with ``motion`` on, a feature of
    the patch together with its change since the previous frame. Learned
    softmax queries pool the patches of each frame, so a small moving object
    is not averaged away by the background. One token per frame.
    """
    v = _as_video_batch(cfg, video)
    b, f, h, w, c = v.shape
    p = cfg.patch
    n = cfg.n_patches
    gh, gw = cfg.grid
    k = cfg.window
    grid = v.reshape(b, f, gh, p, w // p, p, c).permute(0, 1, 2, 4, 3, 5, 6)
    grid = grid.reshape(b, f, gh, gw, p * p * c)
    if k > 1:
        # overlapping k x k windows of patches, so an object straddling a
        # patch boundary is still seen whole by one token
        oh, ow = gh - k + 1, gw - k + 1
        grid = tc.concat([grid[:, :, i:i + oh, j:j + ow] for i in range(k) for j in range(k)], axis=4)
    patches = grid.reshape(b, f, n, cfg.patch_dim)
    x = tc.matmul(patches, P["vis.patch_w"]) + P["vis.patch_b"] + P["vis.patch_pos"]
    x = tc.gelu(x)
    for i in range(1, cfg.patch_layers):
        x = tc.gelu(tc.matmul(x, P[f"vis.mlp{i}_w"]) + P[f"vis.mlp{i}_b"])
    if cfg.motion:
        if f > 1:
            # the first frame has no predecessor and sees zero change
            prev = tc.concat([patches[:, :1], patches[:, :-1]], axis=1)
            change = patches - prev
        else:
            change = tc.scale(patches, 0.0)
        m = tc.matmul(patches, P["vis.motion_x"]) + tc.matmul(change, P["vis.motion_d"])
        x = tc.concat([x, tc.gelu(m + P["vis.motion_b"])], axis=3)
    if not cfg.pool_queries:
        return tc.matmul(tc.mean(x, axis=2), P["vis.proj_w"]) + P["vis.proj_b"]
    weights = tc.softmax(tc.matmul(x, P["vis.pool_q"]), axis=2)     # (B, F, N, Q)
    pooled = tc.matmul(weights.permute(0, 1, 3, 2), x)                # (B, F, Q, D)
    pooled = pooled.reshape(b, f, cfg.pool_queries * cfg.feature_dim)
    return tc.matmul(pooled, P["vis.proj_w"]) + P["vis.proj_b"]


_MASKS: dict[int, Tensor] = {}


def _causal_mask(t: int) -> Tensor:
    if t not in _MASKS:
        _MASKS[t] = Tensor(np.triu(np.full((t, t), NEG_INF, dtype=np.float32), k=1))
    return _MASKS[t]


def _attention(cfg: ModelConfig, P, prefix: str, x: Tensor) -> Tensor:
    b, t, d = x.shape
    nh = cfg.n_heads
    dh = d // nh
    qkv = tc.matmul(x, P[prefix + "qkv_w"]) + P[prefix + "qkv_b"]
    qkv = qkv.reshape(b, t, 3, nh, dh).permute(2, 0, 3, 1, 4)
    q, k, v = qkv[0], qkv[1], qkv[2]
    scores = tc.scale(tc.matmul(q, tc.transpose(k)), 1.0 / np.sqrt(dh)) + _causal_mask(t)
    att = tc.matmul(tc.softmax(scores, axis=-1), v)
    merged = att.permute(0, 2, 1, 3).reshape(b, t, d)
    return tc.matmul(merged, P[prefix + "out_w"]) + P[prefix + "out_b"]


def _block(cfg: ModelConfig, P, i: int, x: Tensor) -> Tensor:
    p = f"layer{i}."
    x = x + _attention(cfg, P, p, tc.layer_norm(x, P[p + "ln1_g"], P[p + "ln1_b"]))
    h = tc.layer_norm(x, P[p + "ln2_g"], P[p + "ln2_b"])
    h = tc.gelu(tc.matmul(h, P[p + "ff_in_w"]) + P[p + "ff_in_b"])
    return x + tc.matmul(h, P[p + "ff_out_w"]) + P[p + "ff_out_b"]


def decode_batch(cfg: ModelConfig, P: dict[str, Tensor], visual: Tensor, tokens,
                 prompt_offset: Tensor | None = None) -> Tensor:
    """Final-layer hidden states for ``[visual | tokens]``; returns (B, F+L, d).

    ``prompt_offset`` (Lp, d), when given, is added to the embeddings of the
    first Lp text tokens; only the joint prompt/video attack uses it.
    """
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.ndim == 1:
        ids = ids[None, :]
    b, length = ids.shape
    t = visual.shape[1] + length
    if t > cfg.max_len:
        raise LengthError(f"sequence length {t} exceeds max_len {cfg.max_len}")
    if visual.shape[0] != b:
        raise ConfigError(f"{visual.shape[0]} visual prefixes for {b} token rows")
    emb = tc.embedding(P["dec.tok_emb"], ids)
    if prompt_offset is not None:
        lp = prompt_offset.shape[0]
        head = emb[:, :lp] + prompt_offset
        emb = tc.concat([head, emb[:, lp:]], axis=1) if lp < length else head
    x = tc.concat([visual, emb], axis=1) + P["dec.pos_emb"][:t]
    for i in range(cfg.n_layers):
        x = _block(cfg, P, i, x)
    return tc.layer_norm(x, P["dec.lnf_g"], P["dec.lnf_b"])


def head(P: dict[str, Tensor], hidden: Tensor) -> Tensor:
    return tc.matmul(hidden, P["dec.head_w"]) + P["dec.head_b"]

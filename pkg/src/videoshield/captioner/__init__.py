"""Toy video captioner: vision encoder g, decoder h, token distributions f_i."""

from .api import (
    GREEDY,
    DecodeConfig,
    autoregressive_loss,
    caption,
    encode_video,
    generate,
    llm_hidden,
    next_token_distribution,
    position_logits,
    prompt_ids,
)
from .checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .model import CaptionerModel, ModelConfig
from .train import TrainConfig, TrainingLog, train_captioner
from .vocab import BOS, DEFAULT_PROMPT, EOS, HELDOUT_PROMPTS, PAD, TRAIN_PROMPTS, UNK, TokenSeq, Vocabulary

__all__ = [
    "BOS", "CaptionerModel", "DEFAULT_PROMPT", "DecodeConfig", "EOS", "GREEDY", "ModelConfig",
    "HELDOUT_PROMPTS", "PAD", "TRAIN_PROMPTS", "TokenSeq", "TrainConfig", "TrainingLog", "UNK", "Vocabulary",
    "autoregressive_loss", "decode_checkpoint", "encode_checkpoint", "load_checkpoint",
    "save_checkpoint", "caption", "encode_video", "generate", "llm_hidden",
    "next_token_distribution", "position_logits", "prompt_ids", "train_captioner",
]

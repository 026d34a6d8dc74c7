"""Command-line surface: train, attack, eval, sweep, transfer, gen-data."""

from .commands import (
    COMMANDS,
    attack_items,
    check_constraint,
    cmd_attack,
    cmd_eval,
    cmd_gen_data,
    cmd_sweep,
    cmd_train,
    cmd_transfer,
    evaluate_items,
    exact_match_and_bleu,
)
from .config import OUTPUT_ENV, RunConfig, load_config_file, parse_config_text, resolve
from .data import VideoItem, read_video_dir, write_video_dir
from .main import main

__all__ = [
    "COMMANDS", "OUTPUT_ENV", "RunConfig", "VideoItem", "attack_items", "check_constraint",
    "cmd_attack", "cmd_eval", "cmd_gen_data", "cmd_sweep", "cmd_train", "cmd_transfer",
    "evaluate_items", "exact_match_and_bleu", "load_config_file", "main", "parse_config_text",
    "read_video_dir", "resolve", "write_video_dir",
]

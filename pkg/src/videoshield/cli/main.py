"""``videoshield`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .. import __version__
from ..errors import VideoShieldError
from .commands import COMMANDS
from .config import FIELD_TYPES, load_config_file, resolve

HELP = {
    "checkpoint": "captioner checkpoint (written by train, read by the others)",
    "checkpoint_b": "second checkpoint for black-box transfer",
    "data": "video directory (<id>.vidt + captions.csv); for train, a gen-data output root",
    "output": "output directory (default: $VIDEOSHIELD_OUTPUT or ./videoshield-out)",
    "epsilon": "l-inf budget, e.g. 16/255",
    "step_size": "PGD step, e.g. 1/255",
    "transforms": "'|'-separated pipeline, e.g. resize_down_up:2|mean_filter:3",
    "eval_prompts": "'|'-separated prompts",
    "sweep_values": "'|'-separated values, e.g. 2/255|4/255 or 1:0|0:1|1:1",
    "sweep_axis": "epsilon, alpha_beta_grid or iterations",
    "eval_transformed": "apply the attack transform pipeline before captioning",
    "jobs": "worker processes for per-video attacks",
}

_FLAGS = [k for k in FIELD_TYPES if k != "command"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="videoshield",
                                     description="Protective adversarial perturbations for video captioners.")
    parser.add_argument("--version", action="version", version=f"videoshield {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        for key in _FLAGS:
            flag = "--" + key.replace("_", "-")
            if key == "eval_transformed":
                p.add_argument(flag, dest=key, action="store_const", const="true",
                               default=argparse.SUPPRESS, help=HELP[key])
            else:
                p.add_argument(flag, dest=key, default=argparse.SUPPRESS, metavar="VALUE",
                               help=HELP.get(key))
    return parser


def _print_summary(command: str, summary: dict) -> None:
    if command == "train":
        print(f"held-out exact-match {summary['heldout_exact_match']:.4f}  "
              f"BLEU {summary['heldout_bleu']:.4f}")
        print(f"checkpoint {summary['checkpoint']}")
        return
    if command == "transfer":
        for (tag, prompt, cond), agg in summary.items():
            print(f"{tag}\t{cond}\t{prompt}\tsimilarity {agg['similarity']:.4f}\t"
                  f"length {agg['mean_length']:.2f}\teos {agg['eos_rate']:.1f}")
        return
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    verbose = args.pop("verbose")
    config_path = args.pop("config", None)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = load_config_file(config_path) if config_path else {}
        cfg = resolve(command, file_values, args)
        summary = COMMANDS[command](cfg)
    except VideoShieldError as exc:
        print(f"videoshield {command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"videoshield {command}: I/O error: {exc}", file=sys.stderr)
        return 3
    _print_summary(command, summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())

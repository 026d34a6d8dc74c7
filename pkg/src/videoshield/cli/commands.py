"""Implementations of the train, attack, eval, sweep, transfer and gen-data commands.

Each command takes a resolved RunConfig, writes its outputs under the
output directory, and returns a small summary dict.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..attacks import content_hash, dumps_manifest, pgd_attack, result_manifest, transform_video
from ..captioner import (
    DEFAULT_PROMPT,
    GREEDY,
    caption,
    load_checkpoint,
    save_checkpoint,
    train_captioner,
)
from ..captioner.checkpoint import encode_checkpoint
from ..errors import ConfigError, ContractError, InputError
from ..metrics import bleu, build_report, caption_records, report_csv
from ..synthdata import generate_corpus
from .config import RunConfig, dump_config_text, parse_number
from .data import VideoItem, read_video_dir, samples_to_items, write_video_dir

log = logging.getLogger(__name__)

BOUND_SLACK = 1e-6


def _out(cfg: RunConfig) -> Path:
    p = Path(cfg.output_dir())
    p.mkdir(parents=True, exist_ok=True)
    return p


def _header(cfg: RunConfig) -> str:
    return (f"# videoshield {__version__}\n"
            f"# config {json.dumps(cfg.to_dict(), sort_keys=True)}\n")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_model(path: str, what: str = "checkpoint"):
    if not path:
        raise ConfigError(f"{what} path is required")
    return load_checkpoint(path)


# -- corpus helpers -----------------------------------------------------------

def _corpus_items(cfg: RunConfig):
    """(train, heldout) VideoItems, read from ``cfg.data`` or generated from the seed."""
    if cfg.data:
        root = Path(cfg.data)
        train = read_video_dir(root / "train", require_references=True)
        held = read_video_dir(root / "heldout", require_references=True)
        return train, held
    corpus = generate_corpus(cfg.n_samples, cfg.seed, cfg.split_ratio)
    return samples_to_items(corpus.train, "train"), samples_to_items(corpus.heldout, "heldout")


def _eval_items(cfg: RunConfig, require_references: bool):
    if not cfg.data:
        raise ConfigError("data directory is required")
    return read_video_dir(cfg.data, cfg.limit, require_references)


# -- attack fan-out -----------------------------------------------------------

_WORKER_MODEL = None


def _init_worker(blob):
    global _WORKER_MODEL
    from ..captioner import decode_checkpoint

    _WORKER_MODEL = decode_checkpoint(blob)


def _attack_one(args):
    video, acfg = args
    return pgd_attack(_WORKER_MODEL, video, acfg)


def check_constraint(x: np.ndarray, adv: np.ndarray, epsilon: float, video_id: str) -> None:
    """Self-check that an adversarial video respects the budget and pixel range."""
    dev = float(np.max(np.abs(adv.astype(np.float64) - x.astype(np.float64)))) if x.size else 0.0
    if dev > epsilon + BOUND_SLACK or adv.min() < 0.0 or adv.max() > 1.0 or not np.all(np.isfinite(adv)):
        raise ContractError(f"{video_id}: adversarial video violates the budget "
                            f"(max deviation {dev:.3g}, epsilon {epsilon:.3g})")


def attack_items(model, items, acfg, jobs: int = 1):
    """Attack every item; results are in input order and independent of ``jobs``."""
    work = [(it.video, acfg) for it in items]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(encode_checkpoint(model),)) as pool:
            results = list(pool.map(_attack_one, work))
    else:
        results = [pgd_attack(model, v, a) for v, a in work]
    for it, res in zip(items, results):
        check_constraint(it.video, res.adversarial, acfg.epsilon, it.video_id)
    return results


def evaluate_items(model, items, prompt, decode=GREEDY, transforms=(), diagnostics=None):
    """Caption items (optionally after a transform pipeline) and score them."""
    refs = {}
    for it in items:
        if it.caption is None:
            raise InputError(f"no reference caption for video {it.video_id!r}")
        refs[it.video_id] = it.caption
    pairs = [(it.video_id, transform_video(it.video, transforms) if transforms else it.video)
             for it in items]
    records = caption_records(model, pairs, prompt, decode)
    return build_report(records, refs, diagnostics=diagnostics)


# -- commands -----------------------------------------------------------------

def cmd_gen_data(cfg: RunConfig) -> dict:
    out = _out(cfg)
    corpus = generate_corpus(cfg.n_samples, cfg.seed, cfg.split_ratio)
    for name, samples in (("train", corpus.train), ("heldout", corpus.heldout)):
        items = samples_to_items(samples, name)
        specs = {it.video_id: json.dumps(s.spec.to_dict(), sort_keys=True) for it, s in zip(items, samples)}
        seeds = {it.video_id: str(s.seed) for it, s in zip(items, samples)}
        write_video_dir(out / name, items, {"spec": specs, "seed": seeds})
    _write(out / "gen_data.cfg", _header(cfg) + dump_config_text(cfg))
    return {"train": len(corpus.train), "heldout": len(corpus.heldout), "output": str(out)}


def exact_match_and_bleu(model, items, prompt=DEFAULT_PROMPT):
    hits = 0
    score = 0.0
    for it in items:
        text = caption(model, it.video, prompt)
        hits += text == it.caption
        score += bleu(text, it.caption)
    return hits / len(items), score / len(items)


def cmd_train(cfg: RunConfig, progress=None) -> dict:
    out = _out(cfg)
    train, held = _corpus_items(cfg)
    model, tlog = train_captioner(train, cfg.train_config(), seed=cfg.seed, progress=progress)
    ckpt = Path(cfg.checkpoint) if cfg.checkpoint else out / "captioner.vsck"
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, ckpt)
    em, bl = exact_match_and_bleu(model, held)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "loss"])
    for i, loss in enumerate(tlog.epoch_loss):
        w.writerow([i, f"{loss:.6f}"])
    buf.write(f"# heldout_exact_match {em:.6f}\n# heldout_bleu {bl:.6f}\n")
    _write(out / "train_log.csv", _header(cfg) + buf.getvalue())
    summary = {
        "checkpoint": str(ckpt),
        "checkpoint_sha256": model.param_digest(),
        "epochs": len(tlog.epoch_loss),
        "final_loss": tlog.epoch_loss[-1],
        "heldout_exact_match": em,
        "heldout_bleu": bl,
        "n_train": len(train),
        "n_heldout": len(held),
    }
    _write(out / "train_manifest.json",
           json.dumps({"tool": "videoshield", "version": __version__, "config": cfg.to_dict(),
                       "summary": summary}, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_attack(cfg: RunConfig) -> dict:
    model = _load_model(cfg.checkpoint)
    items = _eval_items(cfg, require_references=False)
    acfg = cfg.attack_config()
    results = attack_items(model, items, acfg, cfg.jobs)
    out = _out(cfg)
    adv_dir = out / "adv"
    man_dir = out / "manifests"
    man_dir.mkdir(parents=True, exist_ok=True)
    adv_items = [VideoItem(it.video_id, r.adversarial, it.caption) for it, r in zip(items, results)]
    write_video_dir(adv_dir, adv_items)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["video_id", "iterations", "early_stopped", "stagnated", "final_loss", "linf",
                "adversarial_sha256"])
    for it, r in zip(items, results):
        m = result_manifest(r, it.video_id, extra={"run_config": cfg.to_dict(),
                                                   "clean_sha256": content_hash(it.video)})
        _write(man_dir / f"{it.video_id}.json", dumps_manifest(m))
        linf = float(np.max(np.abs(r.adversarial.astype(np.float64) - it.video)))
        fl = "" if r.final_loss is None else f"{r.final_loss:.6f}"
        w.writerow([it.video_id, r.iterations, r.early_stopped, r.stagnated, fl, f"{linf:.8f}",
                    content_hash(r.adversarial)])
    _write(out / "attack_summary.csv", _header(cfg) + buf.getvalue())
    return {
        "videos": len(items),
        "early_stopped": sum(r.early_stopped for r in results),
        "output": str(adv_dir),
    }


def cmd_eval(cfg: RunConfig) -> dict:
    model = _load_model(cfg.checkpoint)
    items = _eval_items(cfg, require_references=True)
    transforms = cfg.attack_config().transforms if cfg.eval_transformed else ()
    report = evaluate_items(model, items, cfg.prompt, cfg.decode_config(), transforms)
    out = _out(cfg)
    _write(out / "report.csv", report_csv(report, cfg.to_dict()))
    return report.aggregate()


def _sweep_settings(cfg: RunConfig):
    """(label, x value, AttackConfig or None for the unattacked baseline)."""
    if not cfg.sweep_values:
        raise ConfigError("sweep needs at least one value")
    out = []
    for raw in cfg.sweep_values:
        if cfg.sweep_axis == "epsilon":
            eps = parse_number(raw)
            if eps == 0:
                out.append((raw, eps, None))
                continue
            out.append((raw, eps, cfg.attack_config(epsilon=eps, step_size=min(cfg.step_size, eps))))
        elif cfg.sweep_axis == "iterations":
            try:
                n = int(raw)
            except ValueError as exc:
                raise ConfigError(f"iterations sweep value {raw!r} is not an integer") from exc
            out.append((raw, n, cfg.attack_config(iterations=n)))
        else:
            a, sep, b = raw.strip("() ").partition(":" if ":" in raw else ",")
            if not sep:
                raise ConfigError(f"alpha_beta_grid value {raw!r}; expected alpha:beta")
            alpha, beta = parse_number(a), parse_number(b)
            label = f"{alpha:g}:{beta:g}"
            if alpha == 0 and beta == 0:
                out.append((label, label, None))
            else:
                out.append((label, label, cfg.attack_config(method="rambling_f", alpha=alpha, beta=beta)))
    return out


SUMMARY_FIELDS = ("bleu", "similarity", "mean_length", "eos_rate", "incomplete_rate")


def _agg_cells(report):
    agg = report.aggregate()
    return ["" if agg[k] is None else f"{agg[k]:.6f}" for k in SUMMARY_FIELDS]


def cmd_sweep(cfg: RunConfig) -> dict:
    model = _load_model(cfg.checkpoint)
    settings = _sweep_settings(cfg)
    items = _eval_items(cfg, require_references=True)
    decode = cfg.decode_config()
    rows = []
    for label, x, acfg in settings:
        if acfg is None:
            report = evaluate_items(model, items, cfg.prompt, decode)
        else:
            results = attack_items(model, items, acfg, cfg.jobs)
            adv = [VideoItem(it.video_id, r.adversarial, it.caption) for it, r in zip(items, results)]
            tf = acfg.transforms if cfg.eval_transformed else ()
            report = evaluate_items(model, adv, cfg.prompt, decode, tf)
        rows.append((label, x, "clean" if acfg is None else acfg.method, report))
    out = _out(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["axis", "value", "method"] + list(SUMMARY_FIELDS))
    for label, _, method, report in rows:
        w.writerow([cfg.sweep_axis, label, method] + _agg_cells(report))
    _write(out / "sweep.csv", _header(cfg) + buf.getvalue())
    plot = io.StringIO()
    pw = csv.writer(plot, lineterminator="\n")
    pw.writerow(["x", "metric", "value"])
    for label, x, _, report in rows:
        agg = report.aggregate()
        for k in SUMMARY_FIELDS:
            if agg[k] is not None:
                pw.writerow([x if isinstance(x, str) else f"{x:.6f}", k, f"{agg[k]:.6f}"])
    _write(out / "sweep_plot.csv", _header(cfg) + plot.getvalue())
    return {label: report.aggregate() for label, _, _, report in rows}


def cmd_transfer(cfg: RunConfig) -> dict:
    model = _load_model(cfg.checkpoint)
    models = [("A", model)]
    if cfg.checkpoint_b:
        models.append(("B", _load_model(cfg.checkpoint_b, "second checkpoint")))
    items = _eval_items(cfg, require_references=True)
    acfg = cfg.attack_config()
    results = attack_items(model, items, acfg, cfg.jobs)
    adv = [VideoItem(it.video_id, r.adversarial, it.caption) for it, r in zip(items, results)]
    prompts = [cfg.prompt] + [p for p in cfg.eval_prompts if p != cfg.prompt]
    decode = cfg.decode_config()
    out = _out(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "prompt", "condition"] + list(SUMMARY_FIELDS))
    summary = {}
    for tag, m in models:
        for p in prompts:
            for cond, group in (("clean", items), ("attacked", adv)):
                report = evaluate_items(m, group, p, decode)
                w.writerow([tag, p, cond] + _agg_cells(report))
                summary[(tag, p, cond)] = report.aggregate()
    _write(out / "transfer.csv", _header(cfg) + buf.getvalue())
    return summary


COMMANDS = {
    "train": cmd_train,
    "attack": cmd_attack,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "transfer": cmd_transfer,
    "gen-data": cmd_gen_data,
}

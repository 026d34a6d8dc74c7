import json

import numpy as np
import pytest

from videoshield import __version__
from videoshield.captioner import save_checkpoint
from videoshield.cli.config import parse_config_text, parse_number, resolve
from videoshield.cli.data import VideoItem, read_video_dir, write_video_dir
from videoshield.cli.main import main
from videoshield.errors import ConfigError


@pytest.fixture
def workspace(tmp_path, tiny_model):
    ckpt = tmp_path / "tiny.vsck"
    save_checkpoint(tiny_model, ckpt)
    rng = np.random.default_rng(5)
    items = [VideoItem(f"v{i}", rng.uniform(0.1, 0.9, (4, 8, 8, 3)).astype(np.float32),
                       "a red square moves left") for i in range(3)]
    write_video_dir(tmp_path / "clips", items)
    return tmp_path, ckpt


def run(*argv):
    return main([str(a) for a in argv])


# -- configuration ---------------------------------------------------------------

def test_precedence_defaults_file_flags():
    file_values = parse_config_text("epsilon = 8/255\niterations = 7\n# comment\nseed = 3\n")
    cfg = resolve("attack", file_values, {"iterations": "9"})
    assert cfg.epsilon == pytest.approx(8 / 255)
    assert cfg.iterations == 9
    assert cfg.seed == 3
    assert cfg.step_size == pytest.approx(1 / 255)


def test_lists_and_optional_values():
    cfg = resolve("eval", parse_config_text("eval_prompts = Describe the video. | What happens?\n"
                                            "early_stop = default\n"))
    assert cfg.eval_prompts == ("Describe the video.", "What happens?")
    assert cfg.early_stop is None


@pytest.mark.parametrize("text", ["bogus = 1", "epsilon = lots", "no equals sign", "command = train",
                                  "eval_transformed = maybe"])
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_parse_number_fraction():
    assert parse_number("16/255") == pytest.approx(16 / 255)
    with pytest.raises(ConfigError):
        parse_number("1/0")


def test_unknown_key_in_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epsilonn = 0.1\n")
    assert run("attack", "--config", cfg) == 2
    assert "epsilonn" in capsys.readouterr().err


def test_missing_config_file_exits_3(tmp_path):
    assert run("attack", "--config", tmp_path / "nope.cfg") == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


# -- data errors -----------------------------------------------------------------

def test_empty_data_dir_exits_2(tmp_path, workspace):
    _, ckpt = workspace
    (tmp_path / "empty").mkdir()
    assert run("eval", "--checkpoint", ckpt, "--data", tmp_path / "empty", "--output", tmp_path / "o") == 2


def test_missing_checkpoint_exits_3(tmp_path, workspace):
    root, _ = workspace
    assert run("eval", "--checkpoint", tmp_path / "none.vsck", "--data", root / "clips",
               "--output", tmp_path / "o") == 3


def test_zero_epochs_exits_2(tmp_path):
    assert run("train", "--epochs", "0", "--output", tmp_path) == 2


def test_video_dir_round_trip(tmp_path):
    v = np.random.default_rng(0).random((2, 4, 4, 3)).astype(np.float32)
    write_video_dir(tmp_path / "d", [VideoItem("b", v, "x y"), VideoItem("a", v * 0.5, "z")])
    items = read_video_dir(tmp_path / "d", require_references=True)
    assert [it.video_id for it in items] == ["a", "b"]
    assert np.array_equal(items[1].video, v) and items[1].caption == "x y"


# -- commands -------------------------------------------------------------------

def _attack(root, ckpt, out, *extra):
    return run("attack", "--checkpoint", ckpt, "--data", root / "clips", "--output", out,
               "--method", "mute_n", "--iterations", "3", "--early-stop", "0", *extra)


def _snapshot(directory):
    return {p.relative_to(directory): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


def test_attack_outputs_reproducible_and_jobs_independent(workspace):
    root, ckpt = workspace
    out = root / "a"
    assert _attack(root, ckpt, out) == 0
    first = _snapshot(out)
    assert any(str(f).endswith(".vidt") for f in first)
    assert _attack(root, ckpt, out) == 0
    assert _snapshot(out) == first
    # the run config (and so the manifests and summary header) records jobs
    assert _attack(root, ckpt, out, "--jobs", "2") == 0
    parallel = _snapshot(out)
    for f, blob in first.items():
        if "manifests" not in str(f) and f.name != "attack_summary.csv":
            assert parallel[f] == blob, f
    m = json.loads((out / "manifests" / "v0.json").read_text())
    assert m["method"] == "mute_n" and "elapsed_seconds" not in m
    before = next(blob for f, blob in first.items() if f.name == "v0.json")
    assert m["adversarial_sha256"] == json.loads(before)["adversarial_sha256"]


def test_attack_respects_budget(workspace):
    root, ckpt = workspace
    assert _attack(root, ckpt, root / "a", "--epsilon", "2/255") == 0
    clean = {it.video_id: it.video for it in read_video_dir(root / "clips")}
    for it in read_video_dir(root / "a" / "adv"):
        assert np.abs(it.video.astype(np.float64) - clean[it.video_id]).max() <= 2 / 255 + 1e-6


def test_eval_writes_report(workspace):
    root, ckpt = workspace
    assert run("eval", "--checkpoint", ckpt, "--data", root / "clips", "--output", root / "e") == 0
    text = (root / "e" / "report.csv").read_text()
    assert text.startswith(f"# videoshield {__version__}")
    assert "__aggregate__" in text and "v2" in text


def test_sweep_and_transfer(workspace):
    root, ckpt = workspace
    assert run("sweep", "--checkpoint", ckpt, "--data", root / "clips", "--output", root / "s",
               "--method", "rambling_f", "--iterations", "2", "--sweep-values", "0|4/255") == 0
    rows = (root / "s" / "sweep.csv").read_text().splitlines()
    assert sum(1 for r in rows if not r.startswith("#")) == 3
    assert run("transfer", "--checkpoint", ckpt, "--checkpoint-b", ckpt, "--data", root / "clips",
               "--output", root / "t", "--method", "mute_s", "--iterations", "2",
               "--eval-prompts", "Describe the video.|What happens in this clip?") == 0
    assert (root / "t" / "transfer.csv").exists()


def test_gen_data_and_short_training(tmp_path, capsys):
    assert run("gen-data", "--n-samples", "20", "--output", tmp_path) == 0
    assert len(list((tmp_path / "heldout").glob("*.vidt"))) == 2
    assert run("train", "--data", tmp_path, "--epochs", "1", "--output", tmp_path / "m") == 0
    assert (tmp_path / "m" / "captioner.vsck").exists()
    assert "held-out exact-match" in capsys.readouterr().out

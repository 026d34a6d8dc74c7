import numpy as np
import pytest

from videoshield import tensorcore as tc
from videoshield.captioner import (
    BOS,
    DEFAULT_PROMPT,
    EOS,
    GREEDY,
    PAD,
    CaptionerModel,
    DecodeConfig,
    ModelConfig,
    TokenSeq,
    TrainConfig,
    Vocabulary,
    autoregressive_loss,
    decode_checkpoint,
    encode_checkpoint,
    encode_video,
    generate,
    llm_hidden,
    load_checkpoint,
    next_token_distribution,
    position_logits,
    save_checkpoint,
    train_captioner,
)
from videoshield.captioner.checkpoint import MAGIC
from videoshield.errors import CheckpointError, ConfigError, LengthError, TokenIndexError
from videoshield.synthdata import generate_corpus


def test_vocab_layout():
    v = Vocabulary.default()
    assert len(v) == 64
    assert v.words[PAD] == "<pad>" and v.words[BOS] == "<bos>" and v.words[EOS] == "<eos>"


def test_encode_decode_round_trip():
    v = Vocabulary.default()
    text = "a red square moves left"
    assert v.decode(v.encode(text)) == text
    assert v.decode(v.encode("What is this video about?")) == "what is this video about?"


def test_encode_prompt_appends_bos():
    v = Vocabulary.default()
    ids = v.encode_prompt(DEFAULT_PROMPT)
    assert ids[-1] == BOS and ids.count(BOS) == 1


def test_decode_rejects_bad_ids():
    with pytest.raises(TokenIndexError):
        Vocabulary.default().decode([4, 999])


def test_token_seq_validation():
    TokenSeq((4, 5, PAD, PAD)).validate()
    with pytest.raises(ValueError):
        TokenSeq((4, EOS)).validate()
    with pytest.raises(ValueError):
        TokenSeq((4, PAD, 5)).validate()


def test_shapes_and_visual_prefix(tiny_model, tiny_video):
    cfg = tiny_model.config
    g = encode_video(tiny_model, tiny_video)
    assert g.shape == (cfg.frames, cfg.d_model)
    h = llm_hidden(tiny_model, tiny_video, DEFAULT_PROMPT)
    n_prompt = len(tiny_model.vocab.encode_prompt(DEFAULT_PROMPT))
    assert h.shape == (cfg.frames + n_prompt, cfg.d_model)
    f = next_token_distribution(tiny_model, tiny_video, DEFAULT_PROMPT)
    assert f.shape == (cfg.vocab_size,)
    assert float(f.data.sum()) == pytest.approx(1.0, abs=1e-5)


def test_forward_is_deterministic(tiny_model, tiny_video):
    a = position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, [4, 5]).data
    b = position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, [4, 5]).data
    assert np.array_equal(a, b)


def test_causal_prefix_consistency(tiny_model, tiny_video):
    full = position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, [4, 5, 10]).data
    part = position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, [4]).data
    np.testing.assert_allclose(full[:2], part, atol=1e-5)


def test_greedy_is_pure(tiny_model, tiny_video):
    assert generate(tiny_model, tiny_video, DEFAULT_PROMPT) == generate(tiny_model, tiny_video, DEFAULT_PROMPT)


def test_generation_respects_budget(tiny_model, tiny_video):
    seq = generate(tiny_model, tiny_video, DEFAULT_PROMPT, DecodeConfig(max_new_tokens=3))
    assert len(seq) <= 3
    assert EOS not in seq.tokens


@pytest.mark.parametrize("cfg", [
    DecodeConfig(mode="sample", temperature=0.7, top_p=0.9, seed=3),
    DecodeConfig(mode="beam", beam_width=3),
])
def test_other_decoders_deterministic_for_seed(tiny_model, tiny_video, cfg):
    assert generate(tiny_model, tiny_video, DEFAULT_PROMPT, cfg) == generate(tiny_model, tiny_video, DEFAULT_PROMPT, cfg)


def test_decode_config_validation():
    with pytest.raises(ConfigError):
        DecodeConfig(mode="nucleus")
    with pytest.raises(ConfigError):
        DecodeConfig(top_p=0.0)
    with pytest.raises(ConfigError):
        DecodeConfig(max_new_tokens=0)


def test_sequence_too_long(tiny_model, tiny_video):
    with pytest.raises(LengthError):
        position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, [4] * 40)


def test_autoregressive_loss_matches_manual_ce(tiny_model, tiny_video):
    target = [4, 5, 10]
    logits = position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, target).data.astype(np.float64)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    manual = -np.mean([logp[i, t] for i, t in enumerate(target + [EOS])])
    got = autoregressive_loss(tiny_model, tiny_video, DEFAULT_PROMPT, target).item()
    assert got == pytest.approx(manual, abs=1e-5)


def test_model_rejects_wrong_video_shape(tiny_model):
    with pytest.raises(ConfigError):
        encode_video(tiny_model, np.zeros((8, 32, 32, 3)))


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(height=30)
    with pytest.raises(ConfigError):
        ModelConfig(d_model=30, n_heads=4)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)


# -- checkpoints ----------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path, tiny_model):
    path = tmp_path / "m.vsck"
    save_checkpoint(tiny_model, path)
    loaded = load_checkpoint(path)
    assert loaded.config == tiny_model.config
    assert loaded.vocab == tiny_model.vocab
    for k, v in tiny_model.params.items():
        assert np.array_equal(loaded.params[k], v)
    assert path.read_bytes()[:4] == MAGIC


def test_checkpoint_corruption(tiny_model):
    blob = encode_checkpoint(tiny_model)
    with pytest.raises(CheckpointError):
        decode_checkpoint(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError):
        decode_checkpoint(blob[:-3])
    with pytest.raises(CheckpointError):
        decode_checkpoint(blob + b"\0")


# -- training -------------------------------------------------------------------

def test_training_is_deterministic_and_reduces_loss():
    corpus = generate_corpus(40, seed=2, frames=4, height=8, width=8)
    cfg = ModelConfig(frames=4, height=8, width=8, d_patch=16, d_model=16, n_heads=2,
                      d_ff=32, max_len=28)
    hyper = TrainConfig(epochs=3, batch_size=8, warmup_steps=2)
    m1, log1 = train_captioner(corpus.train, hyper, seed=7, model_config=cfg)
    m2, log2 = train_captioner(corpus.train, hyper, seed=7, model_config=cfg)
    assert m1.param_digest() == m2.param_digest()
    assert log1.epoch_loss == log2.epoch_loss
    assert log1.epoch_loss[-1] < log1.epoch_loss[0]


def test_gradients_reach_the_pixels(tiny_model, tiny_video):
    with tc.Tape() as tape:
        x = tape.watch(tiny_video)
        loss = autoregressive_loss(tiny_model, x, DEFAULT_PROMPT, [4, 5])
    (g,) = tc.backward(tape, loss, [x])
    assert g.shape == tiny_video.shape and np.any(g.data != 0)


def test_greedy_matches_argmax_chain(tiny_model, tiny_video):
    seq = generate(tiny_model, tiny_video, DEFAULT_PROMPT, GREEDY)
    prefix = []
    for tok in seq.tokens:
        p = next_token_distribution(tiny_model, tiny_video, DEFAULT_PROMPT, prefix).data
        assert int(np.argmax(p)) == tok
        prefix.append(tok)


def test_initialize_defaults():
    m = CaptionerModel.initialize(seed=1)
    assert m.config.vocab_size == len(m.vocab)
    assert m.config.frames == 8


def test_single_sample_is_memorised():
    corpus = generate_corpus(10, seed=4, frames=4, height=8, width=8)
    cfg = ModelConfig(frames=4, height=8, width=8, d_patch=16, d_model=16, n_heads=2,
                      d_ff=32, max_len=28)
    sample = corpus.train[0]
    hyper = TrainConfig(epochs=400, lr=1e-2, batch_size=1, warmup_steps=5, noise_amplitude=0.0,
                        label_smoothing=0.0, prompts=(DEFAULT_PROMPT,))
    model, _ = train_captioner([sample], hyper, seed=0, model_config=cfg)
    target = model.vocab.encode(sample.caption)
    assert autoregressive_loss(model, sample.video, DEFAULT_PROMPT, target).item() < 0.05


def test_label_smoothing_matches_numpy(tiny_model, tiny_video):
    from videoshield.captioner.train import batch_arrays, batch_loss

    inputs, targets = batch_arrays(tiny_model.vocab, ["a red square moves left"], DEFAULT_PROMPT)
    P = {k: tc.Tensor(v) for k, v in tiny_model.params.items()}
    video = tiny_video[None]
    logits = position_logits(tiny_model, tiny_video, DEFAULT_PROMPT, targets[0][targets[0] >= 0][:-1])
    logp = logits.data.astype(np.float64)
    logp = logp - logp.max(-1, keepdims=True)
    logp = logp - np.log(np.exp(logp).sum(-1, keepdims=True))
    seq = targets[0][targets[0] >= 0]
    nll = -logp[np.arange(len(seq)), seq].mean()
    uniform = -logp.mean(-1).mean()
    got = batch_loss(tiny_model, P, video, inputs, targets, label_smoothing=0.25).item()
    assert got == pytest.approx(0.75 * nll + 0.25 * uniform, rel=1e-4)
    assert batch_loss(tiny_model, P, video, inputs, targets).item() == pytest.approx(nll, rel=1e-4)


def test_mean_pooling_variant(tiny_config, tiny_video):
    from dataclasses import replace

    model = CaptionerModel.initialize(replace(tiny_config, pool_queries=0), seed=0)
    assert "vis.pool_q" not in model.params
    feats = encode_video(model, tiny_video)
    assert feats.shape == (tiny_config.frames, tiny_config.d_model)

import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from videoshield.captioner import TokenSeq
from videoshield.errors import InputError
from videoshield.metrics import (
    CaptionRecord,
    bleu,
    build_report,
    caption_similarity,
    incomplete_rate,
    length_and_eos_stats,
    report_csv,
)

WORDS = ["a", "red", "blue", "square", "circle", "moves", "left", "right", "up", "down"]
sentences = st.lists(st.sampled_from(WORDS), min_size=1, max_size=12)


def hand_bleu(cand, ref, max_n=4):
    """Modified n-gram precision counted by hand; add-one on orders >= 2."""
    logs = []
    for n in range(1, max_n + 1):
        c_grams = [tuple(cand[i:i + n]) for i in range(len(cand) - n + 1)]
        r_grams = [tuple(ref[i:i + n]) for i in range(len(ref) - n + 1)]
        clipped = 0
        used = Counter()
        for g in c_grams:
            if used[g] < r_grams.count(g):
                used[g] += 1
                clipped += 1
        if n == 1:
            if clipped == 0:
                return 0.0
            logs.append(math.log(clipped / len(c_grams)))
        else:
            logs.append(math.log((clipped + 1) / (len(c_grams) + 1)))
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(sum(logs) / max_n)


def records(lengths):
    out = []
    for i, n in enumerate(lengths):
        out.append(CaptionRecord(str(i), "p", " ".join(["a"] * n), n, True))
    return out


# -- BLEU -----------------------------------------------------------------------

def test_bleu_identity():
    assert bleu("a red square moves left", "a red square moves left") == pytest.approx(1.0)


def test_bleu_empty_candidate():
    assert bleu("", "a red square moves left") == 0.0
    assert bleu(TokenSeq(()), TokenSeq((4, 5))) == 0.0


def test_bleu_empty_reference_is_input_error():
    with pytest.raises(InputError):
        bleu("a red square", "")


def test_bleu_one_substitution_oracle():
    # p1 = 4/5, p2 = (2+1)/(4+1), p3 = (0+1)/(3+1), p4 = (0+1)/(2+1): product 1/25
    got = bleu("a red square moves left", "a red circle moves left")
    assert got == pytest.approx(5 ** -0.5, abs=1e-6)
    assert got == pytest.approx(0.4472135954999579, abs=1e-6)


def test_bleu_brevity_penalty():
    got = bleu("a red square", "a red square moves left")
    assert got == pytest.approx(math.exp(1 - 5 / 3), abs=1e-6)


def test_bleu_token_ids_and_specials_ignored():
    # BOS=1 / EOS=2 / PAD=0 are dropped before counting
    assert bleu([1, 4, 5, 10, 2, 0], [4, 5, 10]) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(sentences, sentences)
def test_bleu_matches_hand_oracle(cand, ref):
    assert bleu(cand, ref) == pytest.approx(hand_bleu(cand, ref), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(sentences, sentences)
def test_bleu_bounded_and_self_one(cand, ref):
    assert 0.0 <= bleu(cand, ref) <= 1.0
    assert bleu(ref, ref) == pytest.approx(1.0)


# -- caption similarity ---------------------------------------------------------

def test_similarity_identical_and_disjoint():
    assert caption_similarity("a red square", "square red a") == pytest.approx(1.0)
    assert caption_similarity("red square", "blue circle") == 0.0
    assert caption_similarity("", "blue circle") == 0.0


def test_similarity_one_word_changed():
    got = caption_similarity("a red square moves left", "a red square moves right")
    assert got == pytest.approx(4 / 5, abs=1e-6)


def test_similarity_ignores_specials():
    assert caption_similarity([1, 4, 5, 2], [4, 5]) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(sentences, sentences, st.integers(1, 4))
def test_similarity_symmetric_and_repeat_invariant(a, b, k):
    s = caption_similarity(a, b)
    assert s == pytest.approx(caption_similarity(b, a))
    assert caption_similarity(a * k, b * k) == pytest.approx(s)
    assert 0.0 <= s <= 1.0


# -- length / EOS / incomplete ---------------------------------------------------

def test_all_empty_records():
    st_ = length_and_eos_stats(records([0] * 100))
    assert st_.mean_length == 0.0 and st_.eos_rate == 100.0


def test_single_record():
    st_ = length_and_eos_stats(records([5]))
    assert st_.mean_length == 5 and st_.eos_rate == 0.0


def test_mixed_records():
    st_ = length_and_eos_stats(records([0, 0, 6, 10]))
    assert st_.mean_length == 4.0 and st_.eos_rate == 50.0


def test_histogram_mass_and_mean():
    lengths = [0, 3, 3, 7, 1, 0, 12]
    st_ = length_and_eos_stats(records(lengths))
    assert sum(c for _, c in st_.histogram) == len(lengths)
    assert sum(b * c for b, c in st_.histogram) / len(lengths) == st_.mean_length
    non_empty = 100.0 * sum(1 for n in lengths if n) / len(lengths)
    assert st_.eos_rate + non_empty == pytest.approx(100.0, abs=0)


def test_histogram_bin_width():
    st_ = length_and_eos_stats(records([0, 1, 2, 3, 4, 5]), bin_width=2)
    assert st_.histogram == [(0, 2), (2, 2), (4, 2)]


def test_empty_record_set_is_input_error():
    with pytest.raises(InputError):
        length_and_eos_stats([])


def test_incomplete_rate_examples():
    assert incomplete_rate(["the video is a"]) == 100.0
    assert incomplete_rate(["a cat sits."]) == 0.0
    assert incomplete_rate(["a cat", "a dog.", "birds fly"]) == pytest.approx(66.67, abs=0.01)
    assert incomplete_rate(["", "a cat."]) == 0.0
    with pytest.raises(InputError):
        incomplete_rate(["", ""])


def test_caption_record_length_consistency():
    with pytest.raises(ValueError):
        CaptionRecord("v", "p", "", 3, True)
    with pytest.raises(ValueError):
        CaptionRecord("v", "p", "a red", 3, True)


# -- reports --------------------------------------------------------------------

def test_report_aggregates_and_csv():
    recs = [
        CaptionRecord("v0", "p", "a red square moves left", 5, True),
        CaptionRecord("v1", "p", "", 0, True),
    ]
    refs = {"v0": "a red square moves left", "v1": "a blue circle moves up"}
    rep = build_report(recs, refs)
    assert rep.bleu == pytest.approx(0.5)
    assert rep.similarity == pytest.approx(0.5)
    assert rep.eos_rate == 50.0 and rep.mean_length == 2.5
    assert rep.incomplete_rate == 100.0
    text = report_csv(rep, {"seed": 0})
    lines = text.splitlines()
    assert lines[0].startswith("# videoshield ")
    assert lines[1] == '# config {"seed": 0}'
    assert "__aggregate__" in text
    assert text == report_csv(build_report(recs, refs), {"seed": 0})


def test_report_missing_reference():
    with pytest.raises(InputError):
        build_report([CaptionRecord("v9", "p", "a", 1, True)], {})

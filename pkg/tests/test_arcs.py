import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import data_file
from emoarc.arcs import (
    RESUM_INTERVAL,
    ArcError,
    BinMode,
    BinSpec,
    DatasetError,
    EmotionArc,
    LabeledInstance,
    ZeroVarianceError,
    arc_from_scores,
    gold_arc,
    load_dataset,
    order_by_gold,
    predicted_arc,
    read_arc,
    standardize,
    values_arc,
    window_sums,
    write_arc,
    write_dataset,
)
from emoarc.evaluation import spearman
from emoarc.lexicon import FallbackChain, Kind, Lexicon
from emoarc.text import ScoredInstance, preprocess, tokenize
from oracles import naive_ratio_windows, naive_window_means


def stream_of(golds, texts=None):
    texts = texts or [f"t{i}" for i in range(len(golds))]
    return [LabeledInstance(i, t, g) for i, (t, g) in enumerate(zip(texts, golds))]


def as_list(arc):
    return [None if math.isnan(v) else v for v in arc.values.tolist()]


# --- bins ------------------------------------------------------------------


def test_bin_size_must_be_positive():
    with pytest.raises(ValueError, match=">= 1"):
        BinSpec(0)


@given(st.integers(1, 5000), st.data())
def test_window_counts(n, data):
    b = data.draw(st.integers(1, n))
    assert BinSpec(b).n_windows(n) == n - b + 1
    assert BinSpec(b, BinMode.TUMBLING).n_windows(n) == n // b


def test_positions_are_window_starts():
    assert BinSpec(3, "tumbling").positions(10).tolist() == [0, 3, 6]
    assert BinSpec(3).positions(5).tolist() == [0, 1, 2]


# --- gold arcs -------------------------------------------------------------


def test_gold_arc_small_example():
    arc = gold_arc(stream_of([0, 1, 1, 0]), BinSpec(2))
    assert as_list(arc) == [0.5, 1.0, 0.5]


def test_full_width_bin_is_global_mean():
    g = [0.2, -1.0, 3.0, 0.7]
    arc = gold_arc(stream_of(g), BinSpec(4))
    assert len(arc) == 1
    assert arc.values[0] == pytest.approx(sum(g) / 4, abs=1e-15)


def test_3000_instances_bin_300():
    arc = gold_arc(stream_of([i % 7 - 3 for i in range(3000)]), BinSpec(300))
    assert len(arc) == 2701


def test_tumbling_drops_tail():
    arc = gold_arc(stream_of([1, 2, 3, 4, 5]), BinSpec(2, "tumbling"))
    assert as_list(arc) == [1.5, 3.5]


def test_bin_larger_than_stream():
    with pytest.raises(ArcError, match="exceeds"):
        gold_arc(stream_of([1, 2]), BinSpec(3))


def test_gold_arc_requires_labels():
    with pytest.raises(DatasetError):
        gold_arc(stream_of([1, None, 2]), BinSpec(1))


# --- sliding sums vs naive recomputation ------------------------------------


@pytest.mark.parametrize("mode", ["rolling", "tumbling"])
def test_values_arc_matches_naive_windows(mode):
    rng = np.random.default_rng(2)
    for _ in range(30):
        n = int(rng.integers(1, 1500))
        b = int(rng.integers(1, min(n, 300) + 1))
        vals = rng.normal(size=n) * 10 ** rng.uniform(-3, 3)
        vals[rng.random(n) < 0.2] = np.nan
        arc = values_arc(vals, BinSpec(b, mode))
        present = ~np.isnan(vals)
        want = naive_window_means(np.nan_to_num(vals).tolist(), present.tolist(), b, mode == "rolling")
        got = as_list(arc)
        assert len(got) == len(want)
        for g, w in zip(got, want):
            assert (g is None) == (w is None)
            if w is not None:
                assert abs(g - w) <= 1e-9


def test_rolling_sums_stay_exact_past_resum_interval():
    # a large common offset makes unrestarted running sums cancel badly
    rng = np.random.default_rng(9)
    n = 3 * RESUM_INTERVAL + 777
    x = 1000.0 + rng.uniform(-1, 1, n)
    b = 50
    got = window_sums(x, BinSpec(b))
    for s in range(0, n - b + 1, 7):
        assert abs(got[s] - math.fsum(x[s : s + b].tolist())) <= 1e-9
    for s in range(0, n - b + 1, RESUM_INTERVAL):
        assert got[s] == math.fsum(x[s : s + b].tolist())


def test_integer_window_sums_are_exact():
    x = np.arange(10_000, dtype=np.int64) ** 2
    got = window_sums(x, BinSpec(7))
    assert got.dtype.kind == "i"
    assert got[123] == sum(int(v) for v in x[123:130])


# --- predicted arcs --------------------------------------------------------


def test_word_pooling_matches_naive_ratio():
    rng = random.Random(4)
    scored = []
    for _ in range(400):
        n_tok = rng.randint(0, 6)
        found = rng.randint(0, n_tok)
        total = math.fsum(rng.uniform(-1, 1) for _ in range(found))
        scored.append(ScoredInstance(n_tok, found, total, total / found if found else None))
    for policy in ("skip", "zero"):
        arc = arc_from_scores(scored, BinSpec(17), "word", policy)
        dens = [s.in_vocab_count if policy == "skip" else s.token_count for s in scored]
        want = naive_ratio_windows([s.score_sum for s in scored], dens, 17)
        for g, w in zip(as_list(arc), want):
            assert (g is None) == (w is None)
            if w is not None:
                assert abs(g - w) <= 1e-9


def test_all_oov_window_is_missing():
    chain = FallbackChain.of(
        Lexicon("t", "valence", Kind.CONTINUOUS, (-1.0, 1.0), {"good": 0.5, "bad": -0.5})
    )
    texts = ["good", "rock", "stone", "bad"]
    arc = predicted_arc(stream_of([0, 0, 0, 0], texts), chain, "skip", "instance", BinSpec(2))
    assert as_list(arc) == [0.5, None, -0.5]
    assert arc.n_missing == 1


def test_every_point_missing_is_an_error():
    chain = FallbackChain.of(Lexicon("t", "valence", Kind.CONTINUOUS, (-1.0, 1.0), {"good": 0.5}))
    with pytest.raises(ArcError, match="missing"):
        predicted_arc(stream_of([0, 0], ["rock", "stone"]), chain, "skip", "instance", BinSpec(1))


@pytest.mark.parametrize("b", [1, 3, 10, 40])
def test_perfect_lexicon_reproduces_gold(b):
    rng = random.Random(b)
    golds = [rng.choice([-1, 0, 1, 2]) for _ in range(120)]
    words = {g: f"word{g + 1}" for g in (-1, 0, 1, 2)}
    chain = FallbackChain.of(
        Lexicon("p", "valence", Kind.CONTINUOUS, (-1.0, 2.0), {w: float(g) for g, w in words.items()})
    )
    texts = [f"{words[g]} {words[g]}" for g in golds]
    stream = stream_of(golds, texts)
    for pooling in ("instance", "word"):
        pred = predicted_arc(stream, chain, "skip", pooling, BinSpec(b))
        gold = gold_arc(stream, BinSpec(b))
        np.testing.assert_allclose(pred.values, gold.values, rtol=0, atol=1e-12)
        if len(set(gold.values.tolist())) > 1:
            assert spearman(pred, gold) == pytest.approx(1.0, abs=1e-12)


# --- standardization -------------------------------------------------------


def test_standardize_closed_form():
    arc = standardize(EmotionArc(np.arange(3), np.array([1.0, 2.0, 3.0])))
    s = math.sqrt(1.5)
    assert arc.values.tolist() == pytest.approx([-s, 0.0, s], abs=1e-12)
    assert arc.standardized


def test_standardize_constant_arc():
    with pytest.raises(ZeroVarianceError, match="zero variance"):
        standardize(EmotionArc(np.arange(3), np.array([5.0, 5.0, 5.0])))


def test_standardize_keeps_missing_points():
    arc = standardize(EmotionArc(np.arange(4), np.array([1.0, np.nan, 3.0, 2.0])))
    assert math.isnan(arc.values[1])
    assert np.nanmean(arc.values) == pytest.approx(0, abs=1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50))
def test_standardize_is_idempotent(vals):
    arc = EmotionArc(np.arange(len(vals)), np.array(vals))
    try:
        once = standardize(arc)
    except ZeroVarianceError:
        return
    twice = standardize(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-9)
    assert np.std(once.values) == pytest.approx(1.0, abs=1e-9)


# --- ordering --------------------------------------------------------------


def test_order_by_gold():
    out = order_by_gold(stream_of([1, -1, 0], ["a", "b", "c"]))
    assert [i.gold for i in out] == [-1, 0, 1]
    assert [i.text for i in out] == ["b", "c", "a"]
    assert [i.index for i in out] == [0, 1, 2]


def test_order_by_gold_is_stable():
    s = stream_of([0, 0, 1, 1], ["a", "b", "c", "d"])
    assert order_by_gold(s) == s
    ties = order_by_gold(stream_of([1, 0, 1, 0], ["a", "b", "c", "d"]))
    assert [i.text for i in ties] == ["b", "d", "a", "c"]


# --- datasets --------------------------------------------------------------


def test_load_tsv_with_semeval_labels(write_text):
    path = write_text(
        "voc.txt",
        "ID\tTweet\tAffect Dimension\tIntensity Class\n"
        '1\tso "happy" today\tvalence\t3: very positive emotional state can be inferred\n'
        "2\tmeh\tvalence\t0: neutral or mixed emotional state can be inferred\n"
        "3\tawful\tvalence\t-2: moderately negative emotional state can be inferred\n",
    )
    ds = load_dataset(path, "Tweet", "Intensity Class")
    assert [i.gold for i in ds] == [3.0, 0.0, -2.0]
    assert ds[0].text == 'so "happy" today'


def test_load_csv_with_label_map(write_text):
    path = write_text("hau.csv", "tweet,label\nna gode,positive\nba komai,neutral\n")
    ds = load_dataset(path, "tweet", "label", label_map={"positive": 1, "neutral": 0, "negative": -1})
    assert [i.gold for i in ds] == [1.0, 0.0]


def test_load_header_only(write_text):
    with pytest.raises(DatasetError, match="no instances"):
        load_dataset(write_text("h.csv", "text,label\n"))


def test_load_empty_and_missing_column(write_text):
    with pytest.raises(DatasetError, match="empty"):
        load_dataset(write_text("e.csv", ""))
    with pytest.raises(DatasetError, match="missing column"):
        load_dataset(write_text("m.csv", "text,score\na,1\n"))
    with pytest.raises(DatasetError, match="unparseable"):
        load_dataset(write_text("u.csv", "text,label\na,lots\n"))


def test_dataset_round_trip(tmp_path):
    stream = stream_of([0.1, -2.0, None], ['a "quoted", text', "plain", "unlabeled"])
    for as_json, name in ((False, "d.csv"), (True, "d.jsonl")):
        path = tmp_path / name
        write_dataset(path, stream, as_json=as_json)
        assert load_dataset(path) == stream


def test_arc_round_trip(tmp_path):
    arc = EmotionArc(np.array([0, 1, 2]), np.array([0.1, np.nan, 1 / 3]))
    for as_json in (False, True):
        path = tmp_path / f"arc{as_json}.txt"
        write_arc(path, arc, as_json=as_json)
        assert read_arc(path).equals(arc)


def test_semeval_voc_instance_count():
    ds = load_dataset(data_file("EMOARC_VOC"), "Tweet", "Intensity Class")
    assert len(ds) == 2567


def test_hausa_instance_count_and_length():
    ds = load_dataset(data_file("EMOARC_HAUSA"), "tweet", "label")
    assert len(ds) == 14172
    lengths = [len(tokenize(preprocess(i.text))) for i in ds]
    assert sum(lengths) / len(lengths) == pytest.approx(13.29, rel=0.3)

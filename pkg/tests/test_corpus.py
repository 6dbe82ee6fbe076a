import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctrlprompt.corpus import (
    BIN_WIDTH,
    EOS,
    LABELS,
    PAD,
    RESERVED,
    START,
    UNK,
    Corpus,
    Review,
    SynthConfig,
    Vocabulary,
    build_vocab,
    clean_text,
    dedup_exact,
    detokenize,
    label_by_rating,
    length_bin,
    length_preserving_downsample,
    lexicons,
    read_corpus,
    split_by_counts,
    split_by_ratio,
    synth_corpus,
    synth_raw_records,
    synth_reviews,
    tokenize,
    write_corpus,
)
from ctrlprompt.errors import ContractError, DataError


# -- cleaning ----------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, clean",
    [
        ("<br>Great movie!!!", "great movie"),
        ("", ""),
        ("I'm *very* happy.....", "i am very happy"),
        ("Don&#39;t   miss it &amp; enjoy", "don t miss it enjoy"),
        ("It’s gonna be fun, isn't it?", "it is going to be fun is not it"),
        ("Visit https://example.com now", "visit now"),
        ("Café <b>crème</b>", "cafe creme"),
    ],
)
def test_clean_text_examples(raw, clean):
    assert clean_text(raw) == clean


@given(st.text(max_size=80))
def test_clean_text_is_idempotent(s):
    once = clean_text(s)
    assert clean_text(once) == once


@given(st.text(max_size=80))
def test_clean_text_output_alphabet(s):
    out = clean_text(s)
    assert all(c.islower() or c.isdigit() or c == " " for c in out)
    assert "  " not in out and out == out.strip()


# -- labelling and dedup -----------------------------------------------------


def test_label_by_rating_partition():
    assert [label_by_rating(r) for r in (1, 2, 3, 4, 5, None)] == [
        "negative",
        "negative",
        "discard",
        "positive",
        "positive",
        "discard",
    ]
    for bad in (0, 6, 2.5, True):
        with pytest.raises(DataError):
            label_by_rating(bad)


def test_dedup_examples():
    c = Corpus([Review("a b"), Review("a b"), Review("c")])
    assert dedup_exact(c).texts() == ["a b", "c"]
    distinct = Corpus([Review(t) for t in ("x", "y", "z")])
    assert dedup_exact(distinct).texts() == ["x", "y", "z"]


def test_dedup_planted_duplicates():
    rng = np.random.default_rng(5)
    base = [f"review {i}" for i in range(800)]
    planted = [base[i] for i in rng.choice(800, size=200, replace=True)]
    texts = base + planted
    order = rng.permutation(len(texts))
    c = Corpus([Review(texts[i]) for i in order])
    out = dedup_exact(c)
    assert len(out) == 800 == len(set(texts))
    # first occurrence kept, order preserved
    seen, expected = set(), []
    for i in order:
        if texts[i] not in seen:
            seen.add(texts[i])
            expected.append(texts[i])
    assert out.texts() == expected


# -- downsampling ------------------------------------------------------------


def _pool(lengths, label="positive"):
    return Corpus([Review(" ".join(["w"] * n + [str(i)]), label=label) for i, n in enumerate(lengths)])


def test_downsample_trivial_sizes():
    pool = _pool([3, 7, 12, 4, 20])
    assert sorted(length_preserving_downsample(pool, 5, 1).texts()) == sorted(pool.texts())
    assert len(length_preserving_downsample(pool, 0, 1)) == 0
    with pytest.raises(ContractError):
        length_preserving_downsample(pool, 6, 1)


def test_downsample_rejects_mixed_labels():
    pool = Corpus([Review("a", label="positive"), Review("b", label="negative")])
    with pytest.raises(ContractError):
        length_preserving_downsample(pool, 1, 0)


def test_downsample_tracks_bimodal_lengths():
    # 80% five-token reviews, 20% fifty-token reviews
    pool = _pool([4] * 4000 + [49] * 1000)
    short_bin = length_bin(5)
    for seed in range(30):
        out = length_preserving_downsample(pool, 1000, seed)
        frac = np.mean([length_bin(len(t.split())) == short_bin for t in out.texts()])
        assert abs(frac - 0.8) <= 0.03
        assert len(set(out.texts())) == 1000


@given(st.lists(st.integers(1, 60), min_size=1, max_size=60), st.integers(0, 2**16), st.data())
def test_downsample_properties(lengths, seed, data):
    pool = _pool(lengths)
    k = data.draw(st.integers(0, len(pool)))
    a = length_preserving_downsample(pool, k, seed)
    assert len(a) == k
    assert len(set(a.texts())) == k
    assert set(a.texts()) <= set(pool.texts())
    assert a.texts() == length_preserving_downsample(pool, k, seed).texts()


def test_length_bins():
    assert length_bin(0) == 0 and length_bin(BIN_WIDTH) == 1
    assert length_bin(10_000) == 39


# -- splitting ---------------------------------------------------------------


def test_split_by_ratio_is_disjoint_and_stratified():
    c = Corpus([Review(f"p{i}", label="positive") for i in range(70)] + [Review(f"n{i}", label="negative") for i in range(70)])
    parts = split_by_ratio(c, (5, 1, 1), seed=4)
    sizes = {s: Counter(parts[s].labels()) for s in parts}
    assert sizes["train"] == {"positive": 50, "negative": 50}
    assert sizes["validation"] == {"positive": 10, "negative": 10}
    texts = [set(parts[s].texts()) for s in parts]
    assert not (texts[0] & texts[1]) and not (texts[0] & texts[2]) and not (texts[1] & texts[2])


def test_split_by_counts_needs_enough_data():
    c = Corpus([Review(f"p{i}", label=lab) for lab in LABELS for i in range(5)])
    out = split_by_counts(c, {"train": 3, "test": 2}, seed=0)
    assert len(out["train"]) == 6 and len(out["test"]) == 4
    with pytest.raises(DataError):
        split_by_counts(c, {"train": 6}, seed=0)


# -- vocabulary --------------------------------------------------------------


def test_build_vocab_examples():
    assert build_vocab(["a a b"], 6).tokens == list(RESERVED) + ["a", "b"]
    assert build_vocab([], 10).tokens == list(RESERVED)
    assert build_vocab(["y x"], 10).tokens[4:] == ["x", "y"]
    assert len(build_vocab(["a b c d e f"], 6)) == 6
    with pytest.raises(ContractError):
        build_vocab(["a"], 4)


def test_reserved_ids():
    assert (PAD, EOS, START, UNK) == (0, 1, 2, 3)
    assert len(set(RESERVED)) == 4
    with pytest.raises(ContractError):
        Vocabulary(["a", "b", "c", "d"])


def test_tokenize_round_trip_and_oov():
    v = build_vocab(["great movie", "bad movie"], 50)
    assert tokenize("great movie", v) == [v.id("great"), v.id("movie")]
    assert tokenize("zzzunseen movie", v) == [UNK, v.id("movie")]
    assert detokenize(tokenize("bad great movie", v), v) == "bad great movie"


@given(st.lists(st.sampled_from(["a", "b", "c", "dd", "eee"]), max_size=20))
def test_vocab_round_trip_property(words):
    v = build_vocab(["a b c dd eee"], 20)
    text = " ".join(words)
    assert v.decode(v.encode(text)) == text
    for t in v.tokens:
        assert v.tokens[v.id(t)] == t


def test_vocab_file_round_trip(tmp_path):
    v = build_vocab(["one two two three"], 20)
    v.save(tmp_path / "vocab.txt")
    assert Vocabulary.load(tmp_path / "vocab.txt") == v
    lines = (tmp_path / "vocab.txt").read_text().splitlines()
    assert lines[:4] == list(RESERVED)


# -- storage -----------------------------------------------------------------


def test_corpus_file_round_trip(tmp_path):
    reviews = [Review("good one", 5, "positive"), Review("meh", None, None)]
    write_corpus(tmp_path / "c.jsonl", reviews)
    back = read_corpus(tmp_path / "c.jsonl", "test")
    assert back.split == "test"
    assert [(r.text, r.rating, r.label) for r in back] == [("good one", 5, "positive"), ("meh", None, None)]


def test_read_corpus_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps({"text": "ok"}) + "\n{not json\n")
    with pytest.raises(DataError, match=":2:"):
        read_corpus(path)
    with pytest.raises(DataError):
        read_corpus(tmp_path / "missing.jsonl")


# -- synthetic corpus --------------------------------------------------------


def test_synth_counts_and_determinism():
    cfg = SynthConfig(size_per_class=100)
    reviews = synth_reviews(cfg)
    assert Counter(reviews.labels()) == {"positive": 100, "negative": 100}
    assert reviews.texts() == synth_reviews(cfg).texts()
    parts = synth_corpus(cfg)
    # 100 * (5, 1, 1) / 7 with largest-remainder rounding -> (72, 14, 14) per class
    assert {s: len(c) for s, c in parts.items()} == {"train": 144, "validation": 28, "test": 28}


def test_synth_split_ratios():
    parts = synth_corpus(SynthConfig(size_per_class=700))
    assert {s: len(c) for s, c in parts.items()} == {"train": 1000, "validation": 200, "test": 200}


def test_synth_exclusive_words_stay_in_class():
    cfg = SynthConfig(size_per_class=300)
    _, exclusive = lexicons(cfg)
    pos_words = set(exclusive["positive"])
    counts = Counter()
    for r in synth_reviews(cfg):
        for w in r.text.split():
            if w in pos_words:
                counts[r.label] += 1
    assert counts["positive"] / sum(counts.values()) >= 0.95


def test_synth_ratings_match_labels():
    for r in synth_reviews(SynthConfig(size_per_class=50)):
        assert label_by_rating(r.rating) == r.label


def test_synth_raw_records_shape():
    cfg = SynthConfig(size_per_class=40)
    recs = synth_raw_records(cfg, n_neutral=10, n_unrated=5, n_duplicates=7)
    assert len(recs) == 80 + 10 + 5 + 7
    assert sum(r["rating"] == 3 for r in recs) == 10
    assert sum(r["rating"] is None for r in recs) == 5
    cleaned = [clean_text(r["text"]) for r in recs]
    assert len(cleaned) - len(set(cleaned)) == 7

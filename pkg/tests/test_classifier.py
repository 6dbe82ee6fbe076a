import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctrlprompt.classifier import (
    PAPER_TABLE6,
    ClassifierModel,
    ClassifierOptions,
    accuracy,
    predict,
    predict_proba,
    report,
    train_classifier,
)
from ctrlprompt.corpus import LABELS, Corpus, Review, SynthConfig, build_vocab, lexicons, synth_corpus
from ctrlprompt.errors import ContractError

labels = st.sampled_from(LABELS)


def brute_report(preds, gold):
    out = {}
    for lab in LABELS:
        tp = sum(p == lab and g == lab for p, g in zip(preds, gold))
        fp = sum(p == lab and g != lab for p, g in zip(preds, gold))
        fn = sum(p != lab and g == lab for p, g in zip(preds, gold))
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        out[lab] = (prec, rec, 2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return out


# -- report ------------------------------------------------------------------


def test_report_hand_example():
    # TP=45, FP=5, FN=10, TN=40 for "positive"
    gold = ["positive"] * 55 + ["negative"] * 45
    preds = ["positive"] * 45 + ["negative"] * 10 + ["positive"] * 5 + ["negative"] * 40
    r = report(preds, gold)
    pos = r.per_label["positive"]
    assert pos["precision"] == pytest.approx(0.9)
    assert pos["recall"] == pytest.approx(0.8182, abs=1e-4)
    assert pos["f1"] == pytest.approx(0.8571, abs=1e-4)
    assert r.accuracy == pytest.approx(0.85)
    assert r.confusion["positive"]["negative"] == 10


def test_report_perfect_and_complement():
    gold = ["positive", "negative", "negative", "positive"]
    perfect = report(gold, gold)
    assert perfect.accuracy == 1.0
    assert all(v == 1.0 for m in perfect.per_label.values() for k, v in m.items() if k != "support")
    flipped = report(["negative" if g == "positive" else "positive" for g in gold], gold)
    assert flipped.accuracy == 0.0
    assert all(m["recall"] == 0.0 for m in flipped.per_label.values())


def test_report_length_mismatch():
    with pytest.raises(ContractError):
        report(["positive"], ["positive", "negative"])


@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=60), st.randoms())
def test_report_properties(pairs, rnd):
    preds, gold = [p for p, _ in pairs], [g for _, g in pairs]
    r = report(preds, gold)
    trace = sum(r.confusion[lab][lab] for lab in LABELS)
    assert r.accuracy == trace / len(pairs)
    assert sum(sum(row.values()) for row in r.confusion.values()) == len(pairs)
    for lab, (p, rec, f1) in brute_report(preds, gold).items():
        m = r.per_label[lab]
        assert (m["precision"], m["recall"]) == (p, rec)
        assert abs(m["f1"] - f1) <= 1e-12
        assert 0 <= m["f1"] <= 1
    rnd.shuffle(pairs)
    shuffled = report([p for p, _ in pairs], [g for _, g in pairs])
    assert shuffled.per_label == r.per_label


@given(st.lists(labels, min_size=2, max_size=40).filter(lambda xs: len(set(xs)) == 2))
def test_self_report_is_all_ones(preds):
    r = report(preds, preds)
    assert all(m[k] == 1.0 for m in r.per_label.values() for k in ("precision", "recall", "f1"))


# -- model -------------------------------------------------------------------


@pytest.fixture(scope="module")
def separable():
    # high exclusive mass makes the two lexicons nearly disjoint
    cfg = SynthConfig(size_per_class=200, exclusive_mass=0.6, seed=11)
    parts = synth_corpus(cfg)
    vocab = build_vocab(parts["train"].texts(), 2000)
    return cfg, parts, vocab


@pytest.fixture(scope="module")
def trained(separable):
    _, parts, vocab = separable
    model, log = train_classifier(parts["train"], parts["validation"], vocab, ClassifierOptions(epochs=5))
    return model, log


def test_separable_corpus_is_learned(trained, separable):
    model, log = trained
    assert len(log) == 5
    assert max(rec["val_accuracy"] for rec in log) >= 0.95
    assert accuracy(model, separable[1]["validation"]) >= 0.95


def test_predictions_agree_with_lexicon_oracle(trained, separable):
    cfg, parts, _ = separable
    model, _ = trained
    _, exclusive = lexicons(cfg)
    texts = parts["test"].texts()
    oracle = []
    for t in texts:
        words = t.split()
        pos = sum(w in exclusive["positive"] for w in words)
        neg = sum(w in exclusive["negative"] for w in words)
        oracle.append("positive" if pos > neg else "negative")
    preds, _ = predict(model, texts)
    assert np.mean([a == b for a, b in zip(preds, oracle)]) >= 0.9


def test_probabilities_are_rowwise_and_stable(trained):
    model, _ = trained
    texts = ["great fine", "great fine", "", "awful zzz"]
    probs = predict_proba(model, texts)
    assert probs.shape == (4, 2)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert np.array_equal(probs[0], probs[1])
    labs, _ = predict(model, [""])
    assert labs[0] in LABELS


def test_ties_go_to_negative(separable):
    _, _, vocab = separable
    model = ClassifierModel(vocab, ClassifierOptions())
    model.params["head.w"].data[...] = 0.0
    model.params["head.b"].data[...] = 0.0
    labs, probs = predict(model, ["anything", ""])
    assert labs == ["negative", "negative"]
    assert np.all(probs == 0.5)


def test_zero_lr_keeps_untrained_accuracy(separable):
    _, parts, vocab = separable
    opts = ClassifierOptions(lr=0.0, epochs=2)
    untrained = ClassifierModel(vocab, opts)
    before = accuracy(untrained, parts["validation"])
    model, log = train_classifier(parts["train"], parts["validation"], vocab, opts)
    assert accuracy(model, parts["validation"]) == before
    assert all(rec["val_accuracy"] == before for rec in log)


def test_training_is_deterministic(separable, tmp_path):
    _, parts, vocab = separable
    small = Corpus(parts["train"].reviews[:40] + parts["train"].reviews[-40:])
    opts = ClassifierOptions(epochs=1)
    train_classifier(small, parts["validation"], vocab, opts, tmp_path / "a.ckpt")
    train_classifier(small, parts["validation"], vocab, opts, tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    back = ClassifierModel.load(tmp_path / "a.ckpt")
    assert np.array_equal(predict_proba(back, small.texts()[:5]), predict_proba(ClassifierModel.load(tmp_path / "b.ckpt"), small.texts()[:5]))


def test_single_class_training_rejected(separable):
    _, parts, vocab = separable
    with pytest.raises(ContractError):
        train_classifier(parts["train"].with_label("positive"), parts["validation"], vocab)


def test_paper_preset_values():
    assert (PAPER_TABLE6.lr, PAPER_TABLE6.batch_size, PAPER_TABLE6.epochs, PAPER_TABLE6.seed) == (1e-5, 32, 5, 123)


def test_output_is_two_logits(separable):
    _, _, vocab = separable
    model = ClassifierModel(vocab, ClassifierOptions())
    z = model.logits(model.encode_texts(["great", "a b c d e"]))
    assert z.shape == (2, 2)

import json
import shutil

import pytest

from ctrlprompt.cli import main
from ctrlprompt.corpus import read_corpus
from ctrlprompt.evaluation import ngram_overlap

TINY = """\
[corpus]
synth_size_per_class = 90
synth_neutral = 10
synth_unrated = 4
synth_duplicates = 12
vocab_size = 400

[model]
embed_dim = 16
n_layers = 1
n_heads = 2
ff_dim = 32
max_len = 48
pretrain_epochs = 1
pretrain_warmup_steps = 2

[training]
prompt_length = 4
epochs = 2
warmup_steps = 2

[generation]
max_new_tokens = 6

[classifier]
epochs = 2
embed_dim = 16
ff_dim = 32

[eval]
lime_count = 2
lime_samples = 200
"""


def cli(root, *args):
    return main([*args, "--config", str(root / "tiny.ini"), "--out-dir", str(root / "out")])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "tiny.ini").write_text(TINY)
    for cmd in ("make-synth", "preprocess", "pretrain-backbone", "train-generator", "generate", "train-classifier"):
        assert cli(root, cmd) == 0, cmd
    return root


def test_preprocess_summary_counts(pipeline):
    summary = json.loads((pipeline / "out/data/summary.json").read_text())
    assert summary["raw"] == 180 + 10 + 4 + 12
    assert summary["discarded_neutral"] == 10 and summary["discarded_unrated"] == 4
    assert summary["duplicates_removed"] == 12
    counts = summary["datasets"]["dataset-1"]
    assert counts["train"]["positive"] == counts["train"]["negative"]


def test_preprocess_discards_neutral_records(tmp_path):
    raw = [{"text": f"review number {i} is here", "rating": 3 if i < 10 else (5 if i % 2 else 1)} for i in range(100)]
    (tmp_path / "raw.jsonl").write_text("".join(json.dumps(r) + "\n" for r in raw))
    rc = main(["preprocess", "--input", str(tmp_path / "raw.jsonl"), "--out-dir", str(tmp_path / "out"), "--set", "corpus.n_datasets=1"])
    assert rc == 0
    summary = json.loads((tmp_path / "out/data/summary.json").read_text())
    assert summary["discarded"] == 10 and summary["raw"] == 100


def test_preprocess_is_byte_reproducible(pipeline, tmp_path):
    shutil.copy(pipeline / "tiny.ini", tmp_path / "tiny.ini")
    assert cli(tmp_path, "make-synth") == 0 and cli(tmp_path, "preprocess") == 0
    for rel in ("data/raw.jsonl", "data/vocab.txt", "data/summary.json", "data/dataset-2/train.jsonl", "data/dataset-3/test.jsonl"):
        assert (tmp_path / "out" / rel).read_bytes() == (pipeline / "out" / rel).read_bytes()


def test_generator_checkpoints_and_snapshot(pipeline):
    out = pipeline / "out"
    for label in ("positive", "negative"):
        assert (out / f"generators/encoder+decoder/{label}.ckpt").exists()
        assert len((out / f"generators/encoder+decoder/{label}.log.jsonl").read_text().splitlines()) == 2
    snap = (out / "train-generator.config.ini").read_text()
    assert "prompt_length = 4" in snap


def test_generated_counts_match_inputs(pipeline):
    out = pipeline / "out"
    for split in ("train", "validation", "test"):
        inputs = read_corpus(out / f"data/dataset-3/{split}.jsonl")
        for label in ("positive", "negative"):
            gen = read_corpus(out / f"generated/encoder+decoder-plain/{split}.{label}.jsonl")
            assert len(gen) == len(inputs.with_label(label))
            assert set(gen.labels()) == {label}


def test_steer_alpha_zero_matches_plain(pipeline, tmp_path):
    out = pipeline / "out"
    flags = ["--mode", "steer", "--alpha", "0", "--filter_p", "1", "--p", "0.8", "--steer_temperature", "1", "--labels", "positive"]
    assert cli(pipeline, "generate", *flags, "--set", "generation.splits=test") == 0
    steered = read_corpus(out / "generated/encoder+decoder-steer/test.positive.jsonl").texts()
    plain = read_corpus(out / "generated/encoder+decoder-plain/test.positive.jsonl").texts()
    assert steered == plain


def test_evaluate_report_sections(pipeline):
    assert cli(pipeline, "evaluate") == 0
    rep = json.loads((pipeline / "out/eval/encoder+decoder-plain/report.json").read_text())["sections"]
    for section in ("classifier metrics", "similarity", "quality/diversity", "overlap", "extrinsic", "explanations"):
        assert section in rep
    gen = read_corpus(pipeline / "out/generated/encoder+decoder-plain/test.positive.jsonl")
    train = read_corpus(pipeline / "out/data/dataset-2/train.jsonl").with_label("positive")
    for n in (2, 3, 4, 5):
        assert rep["overlap"]["positive"][str(n)] == ngram_overlap(gen.texts(), train.texts(), n)


def test_extrinsic_on_real_data_matches_judge(pipeline, tmp_path):
    # generated files replaced by the judge's own training data
    root = tmp_path
    shutil.copy(pipeline / "tiny.ini", root / "tiny.ini")
    shutil.copytree(pipeline / "out", root / "out")
    gen_dir = root / "out/generated/encoder+decoder-plain"
    for split in ("train", "validation"):
        real = read_corpus(root / f"out/data/dataset-1/{split}.jsonl")
        with open(gen_dir / f"{split}.positive.jsonl", "w") as fh:
            for r in real:
                fh.write(json.dumps(r.to_record()) + "\n")
        (gen_dir / f"{split}.negative.jsonl").write_text("")
    assert cli(root, "evaluate") == 0
    ext = json.loads((root / "out/eval/encoder+decoder-plain/report.json").read_text())["sections"]["extrinsic"]
    assert abs(ext["gap"]) <= 0.1


def test_explain_command(pipeline):
    assert cli(pipeline, "explain", "--text", "Great product, works well!", "--target", "positive") == 0
    res = json.loads((pipeline / "out/explanations.json").read_text())
    assert [t["token"] for t in res[0]["tokens"]] == ["great", "product", "works", "well"]


def test_missing_artifacts_exit_config(tmp_path):
    assert main(["evaluate", "--out-dir", str(tmp_path)]) == 2
    assert main(["train-generator", "--out-dir", str(tmp_path)]) == 2


def test_missing_pretrained_backbone_is_config_error(pipeline, tmp_path):
    assert cli(pipeline, "train-generator", "--set", f"model.pretrained_backbone={tmp_path / 'nope.ckpt'}") == 2


def test_bad_inputs_exit_codes(tmp_path):
    bad = tmp_path / "raw.jsonl"
    bad.write_text('{"text": "fine", "rating": 5}\n{broken\n')
    assert main(["preprocess", "--input", str(bad), "--out-dir", str(tmp_path / "o")]) == 3
    assert main(["preprocess", "--input", str(tmp_path / "absent.jsonl"), "--out-dir", str(tmp_path / "o")]) == 3
    (tmp_path / "c.ini").write_text("[generation]\nbeams = 3\n")
    assert main(["preprocess", "--config", str(tmp_path / "c.ini"), "--out-dir", str(tmp_path / "o")]) == 2
    assert main(["generate", "--out-dir", str(tmp_path / "o"), "--top_p", "0"]) == 2


def test_corrupt_checkpoint_is_data_error(pipeline, tmp_path):
    bad = tmp_path / "judge.ckpt"
    bad.write_bytes((pipeline / "out/classifier/judge.ckpt").read_bytes()[:100])
    assert cli(pipeline, "explain", "--checkpoint", str(bad), "--text", "good") == 3

"""Command-line pipeline: preprocess, pretrain, prompt-tune, generate, classify, evaluate, explain.

Every command takes the same global flags, resolves the configuration
(schema defaults < presets < ``--config`` file < flags), writes a snapshot of
it into the output directory and holds a lock on that directory while it runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from filelock import FileLock

from . import classifier as clf
from .config import ExperimentConfig, csv, optional_float
from .corpus import (
    LABELS,
    SPLITS,
    Corpus,
    Review,
    SynthConfig,
    Vocabulary,
    build_vocab,
    clean_text,
    dedup_exact,
    label_by_rating,
    length_preserving_downsample,
    read_corpus,
    split_by_ratio,
    synth_raw_records,
    write_corpus,
)
from .decoding import GenerationParams, Generators, SteeringParams, generate
from .errors import ConfigError, ContractError, DataError, NumericError
from .evaluation import (
    MetricsReport,
    distinct_n,
    greedy_match_similarity,
    lime_explain,
    ngram_overlap,
    perplexity,
    table_embedder,
)
from .model import SITES, LmModel, ModelConfig, PretrainOptions, TrainOptions, add_prompts, pretrain_backbone, train_prompts
from .numerics.rng import make_rng

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# flag -> config key, for the parameters exposed directly on the command line
FLAG_KEYS = {
    "top_p": "generation.top_p",
    "top_k": "generation.top_k",
    "temperature": "generation.temperature",
    "no_repeat_ngram_size": "generation.no_repeat_ngram_size",
    "max_new_tokens": "generation.max_new_tokens",
    "prefix_len": "generation.prefix_len",
    "mode": "generation.mode",
    "labels": "generation.labels",
    "alpha": "steering.alpha",
    "filter_p": "steering.filter_p",
    "p": "steering.p",
    "k": "steering.k",
    "steer_temperature": "steering.temperature",
    "prompt_sites": "training.prompt_sites",
    "epochs": "training.epochs",
    "lr": "training.lr",
}


class Workspace:
    """Paths of every artifact a run reads or writes, relative to the output directory."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.root = Path(cfg["run"]["out_dir"])

    def data(self, *parts: str) -> Path:
        return self.root.joinpath("data", *parts)

    def dataset(self, k: int, split: str) -> Path:
        return self.data(f"dataset-{k}", f"{split}.jsonl")

    @property
    def vocab(self) -> Path:
        return self.data("vocab.txt")

    @property
    def backbone(self) -> Path:
        custom = self.cfg["model"]["pretrained_backbone"]
        return Path(custom) if custom else self.root / "backbone.ckpt"

    @property
    def variant(self) -> str:
        return "+".join(prompt_sites(self.cfg))

    def generator(self, label: str, variant: str | None = None) -> Path:
        return self.root / "generators" / (variant or self.variant) / f"{label}.ckpt"

    def generated(self, split: str, label: str, mode: str | None = None) -> Path:
        mode = mode or self.cfg["generation"]["mode"]
        return self.root / "generated" / f"{self.variant}-{mode}" / f"{split}.{label}.jsonl"

    def load_generated(self, split: str, mode: str, vocab: Vocabulary | None = None) -> Corpus:
        paths = [self.generated(split, lab, mode) for lab in LABELS]
        present = [p for p in paths if p.exists()]
        if not present:
            self.require(*paths)
        reviews = [r for p in present for r in read_corpus(p, split).reviews]
        corpus = Corpus(reviews, split, f"generated:{self.variant}-{mode}")
        return _tokenize(corpus, vocab) if vocab is not None else corpus

    def classifier(self, name: str = "judge") -> Path:
        return self.root / "classifier" / f"{name}.ckpt"

    def require(self, *paths: Path) -> None:
        missing = [str(p) for p in paths if not p.exists()]
        if missing:
            raise ConfigError("missing artifacts: " + ", ".join(missing))


def prompt_sites(cfg: ExperimentConfig) -> list[str]:
    sites = csv(cfg["training"]["prompt_sites"])
    allowed = SITES.get(cfg["model"]["architecture"], ())
    bad = [s for s in sites if s not in allowed]
    if not sites or bad:
        raise ConfigError(f"prompt_sites {sites} invalid for {cfg['model']['architecture']} (allowed: {allowed})")
    return sites


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def load_vocab(ws: Workspace) -> Vocabulary:
    ws.require(ws.vocab)
    return Vocabulary.load(ws.vocab)


def load_split(ws: Workspace, k: int, split: str, vocab: Vocabulary | None = None) -> Corpus:
    path = ws.dataset(k, split)
    ws.require(path)
    corpus = read_corpus(path, split)
    return _tokenize(corpus, vocab) if vocab is not None else corpus


def _tokenize(corpus: Corpus, vocab: Vocabulary) -> Corpus:
    for r in corpus:
        r.token_ids = vocab.encode(r.text)
    return corpus


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_make_synth(cfg: ExperimentConfig, args) -> int:
    """Write raw web-style synthetic review records for ``preprocess``."""
    c = cfg["corpus"]
    synth = SynthConfig(
        size_per_class=c["synth_size_per_class"], exclusive_mass=c["synth_exclusive_mass"], seed=cfg["run"]["seed"]
    )
    records = synth_raw_records(synth, c["synth_neutral"], c["synth_unrated"], c["synth_duplicates"])
    out = Path(args.output) if args.output else Workspace(cfg).data("raw.jsonl")
    _write_jsonl(out, records)
    print(f"wrote {len(records)} raw records to {out}")
    return EXIT_OK


def cmd_preprocess(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    c = cfg["corpus"]
    seed = cfg["run"]["seed"]
    source = Path(args.input or c["input"] or ws.data("raw.jsonl"))
    raw = read_corpus(source)
    summary: dict = {"raw": len(raw), "empty_after_cleaning": 0}
    summary.update(discarded=0, discarded_neutral=0, discarded_unrated=0)
    labelled = []
    for r in raw:
        text = clean_text(r.text)
        label = label_by_rating(r.rating)
        if label == "discard":
            summary["discarded"] += 1
            summary["discarded_unrated" if r.rating is None else "discarded_neutral"] += 1
            continue
        if not text:
            summary["empty_after_cleaning"] += 1
            continue
        labelled.append(Review(text=text, rating=r.rating, label=label))
    deduped = dedup_exact(Corpus(labelled, "train", str(source)))
    summary["duplicates_removed"] = len(labelled) - len(deduped)
    pools = {lab: deduped.with_label(lab) for lab in LABELS}
    summary["pool"] = {lab: len(p) for lab, p in pools.items()}
    n_sets = c["n_datasets"]
    if n_sets < 1:
        raise ConfigError("n_datasets must be at least 1")
    per_set = c["per_label"] or min(len(p) for p in pools.values()) // n_sets
    if per_set <= 0 or per_set * n_sets > min(len(p) for p in pools.values()):
        raise DataError(f"cannot draw {n_sets} x {per_set} reviews per label from pools {summary['pool']}")
    ratios = csv(c["ratios"], float)
    if len(ratios) != 3:
        raise ConfigError("ratios needs three comma-separated values (train, validation, test)")
    chunks: dict[int, list[Review]] = {k: [] for k in range(1, n_sets + 1)}
    for li, lab in enumerate(LABELS):
        sample = length_preserving_downsample(pools[lab], per_set * n_sets, seed + li)
        order = make_rng(seed, 50 + li).permutation(len(sample))
        for k in range(n_sets):
            chunks[k + 1].extend(sample.reviews[i] for i in sorted(order[k * per_set : (k + 1) * per_set]))
    summary["datasets"] = {}
    train_texts = []
    for k, reviews in chunks.items():
        splits = split_by_ratio(Corpus(reviews, "train", str(source)), ratios, seed + 100 + k)
        counts = {}
        for split, corpus in splits.items():
            path = ws.dataset(k, split)
            path.parent.mkdir(parents=True, exist_ok=True)
            write_corpus(path, corpus)
            counts[split] = {lab: len(corpus.with_label(lab)) for lab in LABELS}
        summary["datasets"][f"dataset-{k}"] = counts
        train_texts.extend(splits["train"].texts())
    build_vocab(train_texts, c["vocab_size"]).save(ws.vocab)
    _write_json(ws.data("summary.json"), summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _model_config(cfg: ExperimentConfig, vocab: Vocabulary) -> ModelConfig:
    m = cfg["model"]
    return ModelConfig(
        vocab_size=len(vocab),
        embed_dim=m["embed_dim"],
        n_layers=m["n_layers"],
        n_heads=m["n_heads"],
        ff_dim=m["ff_dim"],
        max_len=m["max_len"],
        architecture=m["architecture"],
        source_len=m["source_len"] or None,
    )


def cmd_pretrain_backbone(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    m = cfg["model"]
    vocab = load_vocab(ws)
    train = load_split(ws, cfg["corpus"]["generator_dataset"], "train", vocab)
    model = LmModel(_model_config(cfg, vocab), seed=cfg["run"]["seed"])
    opts = PretrainOptions(
        epochs=m["pretrain_epochs"],
        batch_size=m["pretrain_batch_size"],
        lr=m["pretrain_lr"],
        seed=cfg["run"]["seed"],
        warmup_steps=m["pretrain_warmup_steps"],
    )
    out = ws.root / "backbone.ckpt"
    log = pretrain_backbone(model, train, opts, log_path=ws.root / "backbone.log.jsonl")
    model.save(out, {"pretrain_options": asdict(opts)})
    print(f"backbone written to {out}; final train loss {log[-1]['train_loss']:.4f}" if log else f"wrote {out}")
    return EXIT_OK


def _train_options(cfg: ExperimentConfig) -> TrainOptions:
    t = cfg["training"]
    if t["relative_step"] or t["scale_parameter"] or t["warmup_init"] or t["beta1"].lower() != "none":
        raise ConfigError("only relative_step/scale_parameter/warmup_init = false and beta1 = none are supported")
    eps = csv(t["eps"], float)
    if len(eps) != 2:
        raise ConfigError("eps needs two comma-separated values")
    return TrainOptions(
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        lr=t["lr"],
        seed=cfg["run"]["seed"],
        warmup_steps=t["warmup_steps"],
        weight_decay=t["weight_decay"],
        eps=(eps[0], eps[1]),
        clip_threshold=t["clip_threshold"],
        decay_rate=t["decay_rate"],
    )


def _load_backbone(cfg: ExperimentConfig, ws: Workspace, vocab: Vocabulary) -> LmModel:
    if ws.backbone.exists():
        model, _ = LmModel.load(ws.backbone)
        if model.prompts:
            raise ConfigError(f"{ws.backbone} already carries soft prompts")
        if model.config.vocab_size != len(vocab):
            raise ConfigError(f"{ws.backbone} was built for a vocabulary of {model.config.vocab_size}")
        return model
    if cfg["model"]["pretrained_backbone"]:
        raise ConfigError(f"pretrained_backbone {ws.backbone} does not exist")
    warnings.warn("no pretrained backbone found; prompt-tuning a randomly initialised one", stacklevel=2)
    return LmModel(_model_config(cfg, vocab), seed=cfg["run"]["seed"])


def cmd_train_generator(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    vocab = load_vocab(ws)
    sites = prompt_sites(cfg)
    opts = _train_options(cfg)
    k = cfg["corpus"]["generator_dataset"]
    train, val = load_split(ws, k, "train", vocab), load_split(ws, k, "validation", vocab)
    limit = cfg["training"]["max_train"]
    for label in LABELS:
        model = _load_backbone(cfg, ws, vocab)
        add_prompts(model, {s: cfg["training"]["prompt_length"] for s in sites}, seed=cfg["run"]["seed"])
        tr = train.with_label(label)
        if limit:
            tr = tr.derive(tr.reviews[:limit])
        out = ws.generator(label)
        out.parent.mkdir(parents=True, exist_ok=True)
        log = train_prompts(model, tr, val.with_label(label), opts, out, out.with_suffix(".log.jsonl"))
        best = min(r["val_loss"] for r in log) if log else float("nan")
        print(f"{label}: prompts {sites} written to {out}; best validation loss {best:.4f}")
    return EXIT_OK


def generation_params(cfg: ExperimentConfig) -> GenerationParams:
    g = cfg["generation"]
    if not g["do_sample"]:
        raise ConfigError("only sampled decoding is implemented (do_sample = true)")
    if g["repetition_penalty"] != 1.0:
        raise ConfigError("repetition_penalty other than 1.0 is not implemented")
    return GenerationParams(
        max_new_tokens=g["max_new_tokens"],
        temperature=g["temperature"],
        top_p=g["top_p"],
        top_k=g["top_k"],
        no_repeat_ngram_size=g["no_repeat_ngram_size"],
        prefix_len=g["prefix_len"],
        seed=cfg["run"]["seed"],
    )


def steering_params(cfg: ExperimentConfig, label: str) -> SteeringParams:
    s = cfg["steering"]
    if not s["sample"]:
        raise ConfigError("only sampled steering is implemented (sample = true)")
    overrides = {"top_k": s["k"], "seed": cfg["run"]["seed"]}
    for key in ("filter_p", "p", "temperature", "alpha"):
        try:
            value = optional_float(s[key])
        except ValueError as exc:
            raise ConfigError(f"[steering] {key} = {s[key]!r} is not a number") from exc
        if value is not None:
            overrides[key] = value
    preset = SteeringParams.positive if label == "positive" else SteeringParams.negative
    return preset(**overrides)


def _load_generator(path: Path) -> LmModel:
    return LmModel.load(path)[0]


def cmd_generate(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    g = cfg["generation"]
    mode = g["mode"]
    if mode not in ("plain", "steer"):
        raise ConfigError(f"generation mode must be plain or steer, got {mode!r}")
    vocab = load_vocab(ws)
    labels = csv(g["labels"])
    if not labels or any(lab not in LABELS for lab in labels):
        raise ConfigError(f"labels must be drawn from {LABELS}")
    needed = labels if mode == "plain" else LABELS
    ws.require(*(ws.generator(lab) for lab in needed))
    models = {lab: _load_generator(ws.generator(lab)) for lab in needed}
    params = generation_params(cfg)
    for split in csv(g["splits"]):
        if split not in SPLITS:
            raise ConfigError(f"unknown split {split!r}")
        inputs = load_split(ws, cfg["corpus"]["input_dataset"], split, vocab)
        for label in labels:
            pool = inputs.with_label(label)
            if g["max_inputs"]:
                pool = pool.derive(pool.reviews[: g["max_inputs"]])
            if mode == "plain":
                gens, sp, tag = models[label], None, f"{ws.variant}/{label}"
            else:
                other = "negative" if label == "positive" else "positive"
                gens = Generators(models[label], models[label], models[other])
                sp, tag = steering_params(cfg, label), f"{ws.variant}/steer-{label}"
            out_corpus = generate(gens, pool, params, vocab, label=label, steering=sp, source_model=tag)
            out = ws.generated(split, label, mode)
            out.parent.mkdir(parents=True, exist_ok=True)
            write_corpus(out, out_corpus)
            print(f"{split}/{label}: {len(out_corpus)} generated reviews written to {out}")
    return EXIT_OK


def classifier_options(cfg: ExperimentConfig) -> clf.ClassifierOptions:
    c = cfg["classifier"]
    return clf.ClassifierOptions(seed=cfg["run"]["seed"], **c)


def _report_dict(model, test: Corpus) -> dict:
    preds, _ = clf.predict(model, test.texts())
    return clf.report(preds, test.labels()).to_dict()


def cmd_train_classifier(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    vocab = load_vocab(ws)
    k = cfg["corpus"]["classifier_dataset"]
    train, val, test = (load_split(ws, k, s) for s in SPLITS)
    out = ws.classifier("judge")
    out.parent.mkdir(parents=True, exist_ok=True)
    model, log = clf.train_classifier(train, val, vocab, classifier_options(cfg), out)
    _write_jsonl(out.with_suffix(".log.jsonl"), log)
    rep = _report_dict(model, test)
    _write_json(out.with_suffix(".report.json"), rep)
    print(f"judge classifier written to {out}; test accuracy {rep['accuracy']:.4f}")
    return EXIT_OK


def _explanations(cfg: ExperimentConfig, model, texts: Sequence[str], target: str | None = None) -> list[dict]:
    e = cfg["eval"]
    out = []
    for i, text in enumerate(texts):
        if not text.split():
            continue
        label = target or clf.predict(model, [text])[0][0]
        exp = lime_explain(
            model, text, label, num_samples=e["lime_samples"], kernel_width=e["lime_kernel_width"],
            seed=cfg["run"]["seed"] + i,
        )
        out.append(exp.to_dict())
    return out


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    e = cfg["eval"]
    mode = cfg["generation"]["mode"]
    vocab = load_vocab(ws)
    split = e["split"]
    needed = [ws.classifier("judge")] + [ws.generator(lab) for lab in LABELS]
    gen_splits = [split] + (["train", "validation"] if e["extrinsic"] else [])
    needed += [ws.generated(s, lab, mode) for s in gen_splits for lab in LABELS]
    ws.require(*needed)
    judge = clf.ClassifierModel.load(ws.classifier("judge"))
    generated = ws.load_generated(split, mode, vocab)
    inputs = load_split(ws, cfg["corpus"]["input_dataset"], split, vocab)
    gen_train = load_split(ws, cfg["corpus"]["generator_dataset"], "train", vocab)
    report = MetricsReport(f"{ws.variant}-{mode} on {split}")

    report.add("classifier metrics", _report_dict(judge, generated))

    similarity, quality, overlap = {}, {}, {}
    for label in LABELS:
        gen = generated.with_label(label)
        if not len(gen):
            continue
        model = _load_generator(ws.generator(label))
        by_index = {r.meta.get("input_index"): r for r in gen}
        refs = inputs.with_label(label).reviews
        pairs = [(by_index[i].token_ids, refs[i].token_ids) for i in sorted(by_index) if i is not None and i < len(refs)]
        embed = table_embedder(model.params["dec.tok_emb"].data)
        if pairs:
            sim = greedy_match_similarity([p[0] for p in pairs], [p[1] for p in pairs], embed)
            similarity[label] = asdict(sim)
        quality[label] = {
            "perplexity": perplexity(model, gen),
            **{f"dist_{n}": distinct_n(gen, n) for n in csv(e["distinct_ns"], int)},
        }
        overlap[label] = {
            str(n): ngram_overlap(gen, gen_train.with_label(label), n, e["overlap_denominator"])
            for n in csv(e["overlap_ns"], int)
        }
    quality["all"] = {f"dist_{n}": distinct_n(generated, n) for n in csv(e["distinct_ns"], int)}
    report.add("similarity", similarity)
    report.add("quality/diversity", quality)
    report.add("overlap", overlap)

    explainer = judge
    if e["extrinsic"]:
        k = cfg["corpus"]["classifier_dataset"]
        real_test = load_split(ws, k, "test")
        g_train = ws.load_generated("train", mode)
        g_val = ws.load_generated("validation", mode)
        path = ws.root / "classifier" / f"extrinsic-{ws.variant}-{mode}.ckpt"
        path.parent.mkdir(parents=True, exist_ok=True)
        synthetic, log = clf.train_classifier(g_train, g_val, vocab, classifier_options(cfg), path)
        _write_jsonl(path.with_suffix(".log.jsonl"), log)
        ext = _report_dict(synthetic, real_test)
        real_acc = _report_dict(judge, real_test)["accuracy"]
        report.add(
            "extrinsic",
            {"generated-data classifier": ext, "real-data accuracy": real_acc, "gap": real_acc - ext["accuracy"]},
        )
        explainer = synthetic
        lime_texts = real_test.texts()[: e["lime_count"]]
    else:
        lime_texts = inputs.texts()[: e["lime_count"]]
    report.add("explanations", _explanations(cfg, explainer, lime_texts))

    out_dir = ws.root / "eval" / f"{ws.variant}-{mode}"
    out_dir.mkdir(parents=True, exist_ok=True)
    js, txt = report.save(out_dir / "report")
    sys.stdout.write(report.to_text())
    print(f"report written to {js} and {txt}")
    return EXIT_OK


def cmd_explain(cfg: ExperimentConfig, args) -> int:
    ws = Workspace(cfg)
    path = Path(args.checkpoint) if args.checkpoint else ws.classifier("judge")
    ws.require(path)
    model = clf.ClassifierModel.load(path)
    texts = [clean_text(t) for t in args.text] if args.text else None
    if texts is None:
        texts = load_split(ws, cfg["corpus"]["classifier_dataset"], "test").texts()[: cfg["eval"]["lime_count"]]
    if args.target and args.target not in LABELS:
        raise ConfigError(f"target must be one of {LABELS}")
    results = _explanations(cfg, model, texts, args.target)
    if not results:
        raise DataError("nothing to explain (all texts empty after cleaning)")
    _write_json(ws.root / "explanations.json", results)
    for res in results:
        print(f"target={res['target']} intercept={res['intercept']:+.4f} r2={res['score']:.4f}")
        for item in res["tokens"]:
            print(f"  {item['token']}\t{item['weight']:+.4f}")
    return EXIT_OK


COMMANDS = {
    "make-synth": cmd_make_synth,
    "preprocess": cmd_preprocess,
    "pretrain-backbone": cmd_pretrain_backbone,
    "train-generator": cmd_train_generator,
    "generate": cmd_generate,
    "train-classifier": cmd_train_classifier,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [corpus], [model], ... sections")
    common.add_argument("--seed", type=int, help="global seed (overrides run.seed)")
    common.add_argument("--out-dir", help="output directory (overrides run.out_dir)")
    common.add_argument("--preset", action="append", default=[], help="table6, table7, table8, table9-pos, table9-neg")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override any key")
    for flag in FLAG_KEYS:
        common.add_argument(f"--{flag}", default=None, help=f"sets {FLAG_KEYS[flag]}")

    parser = argparse.ArgumentParser(prog="ctrlprompt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("make-synth", parents=[common], help="write raw synthetic review records")
    p.add_argument("--output")
    p = sub.add_parser("preprocess", parents=[common], help="clean, label, dedup, downsample and split")
    p.add_argument("--input")
    sub.add_parser("pretrain-backbone", parents=[common], help="LM-train the backbone on the generator dataset")
    sub.add_parser("train-generator", parents=[common], help="prompt-tune one generator per label")
    sub.add_parser("generate", parents=[common], help="plain or steered generation from the input dataset")
    sub.add_parser("train-classifier", parents=[common], help="train the judge classifier")
    sub.add_parser("evaluate", parents=[common], help="intrinsic and extrinsic metrics report")
    p = sub.add_parser("explain", parents=[common], help="LIME token weights for a classifier")
    p.add_argument("--checkpoint")
    p.add_argument("--text", action="append", default=[])
    p.add_argument("--target")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for name in args.preset:
        cfg.apply_preset(name)
    if args.config:
        cfg.read_file(args.config)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.override(key.strip(), value)
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            cfg.override(key, value)
    if args.seed is not None:
        cfg.override("run.seed", args.seed)
    if args.out_dir is not None:
        cfg.override("run.out_dir", args.out_dir)
    return cfg


def run(args) -> int:
    cfg = resolve_config(args)
    root = Path(cfg["run"]["out_dir"])
    root.mkdir(parents=True, exist_ok=True)
    with FileLock(str(root / ".lock")):
        cfg.snapshot(root / f"{args.command}.config.ini")
        return COMMANDS[args.command](cfg, args)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ContractError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

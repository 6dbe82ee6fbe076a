"""The end-to-end controllability experiment shared by the acceptance criteria.

Three independently seeded synthetic datasets play the three dataset roles:
dataset-1 trains the judge classifier, dataset-2 trains the backbone and the
prompts, dataset-3 supplies generation prefixes. For every seed, one
generator per label is prompt-tuned for each prompt placement and then
continues every dataset-3 review of its label.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ctrlprompt.classifier import ClassifierModel, train_classifier
from ctrlprompt.corpus import LABELS, SPLITS, Corpus, SynthConfig, Vocabulary, build_vocab, synth_corpus
from ctrlprompt.decoding import GenerationParams, generate
from ctrlprompt.model import (
    LmModel,
    ModelConfig,
    PretrainOptions,
    TrainOptions,
    add_prompts,
    pretrain_backbone,
    train_prompts,
)

SEEDS = (0, 1, 2, 3, 4)
PROMPT_LENGTH = 20
VARIANTS = {
    "encoder+decoder": ("encoder", "decoder"),
    "encoder": ("encoder",),
}
# Adafactor settings from the prompt-tuning hyperparameter table
TRAIN = dict(epochs=20, batch_size=10, lr=0.15, warmup_steps=500, weight_decay=0.1)
SIZE_PER_CLASS = 700


@dataclass
class Experiment:
    vocab: Vocabulary
    data: dict[int, dict[str, Corpus]]
    judge: ClassifierModel
    backbone_checksum: str
    backbone_params: dict
    model_config: ModelConfig
    # (variant, seed, label) -> trained generator / its generations (inputs ordered train, validation, test)
    generators: dict = field(default_factory=dict)
    generated: dict = field(default_factory=dict)
    input_splits: dict = field(default_factory=dict)
    seconds: float = 0.0

    def generated_split(self, variant: str, seed: int, label: str, split: str) -> Corpus:
        owners = self.input_splits[label]
        reviews = [r for r, s in zip(self.generated[variant, seed, label], owners) if s == split]
        return Corpus(reviews, split, f"generated:{variant}")

    def inputs(self, label: str) -> Corpus:
        return Corpus([r for s in SPLITS for r in self.data[3][s].with_label(label)], "train", "dataset-3")


def _tokenize(parts: dict[str, Corpus], vocab: Vocabulary) -> None:
    for corpus in parts.values():
        for r in corpus:
            r.token_ids = vocab.encode(r.text)


def run_experiment(seeds=SEEDS) -> Experiment:
    t0 = time.perf_counter()
    data = {k: synth_corpus(SynthConfig(size_per_class=SIZE_PER_CLASS, seed=k)) for k in (1, 2, 3)}
    vocab = build_vocab(data[2]["train"].texts(), 2000)
    for parts in data.values():
        _tokenize(parts, vocab)
    judge, _ = train_classifier(data[1]["train"], data[1]["validation"], vocab)
    cfg = ModelConfig(vocab_size=len(vocab), max_len=64)
    base = LmModel(cfg, seed=123)
    pretrain_backbone(base, data[2]["train"], PretrainOptions(epochs=8))
    exp = Experiment(vocab, data, judge, base.backbone_checksum(), base.state_dict(), cfg)
    for label in LABELS:
        exp.input_splits[label] = [s for s in SPLITS for _ in data[3][s].with_label(label)]
    for seed in seeds:
        for variant, sites in VARIANTS.items():
            for label in LABELS:
                model = LmModel(cfg, params=exp.backbone_params)
                add_prompts(model, {s: PROMPT_LENGTH for s in sites}, seed=seed)
                train_prompts(
                    model,
                    data[2]["train"].with_label(label),
                    data[2]["validation"].with_label(label),
                    TrainOptions(seed=seed, **TRAIN),
                )
                exp.generators[variant, seed, label] = model
                exp.generated[variant, seed, label] = generate(
                    model, exp.inputs(label), GenerationParams(seed=seed), vocab, label=label, source_model=variant
                )
    exp.seconds = time.perf_counter() - t0
    return exp

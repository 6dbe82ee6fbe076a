"""Soft-prompt initialisation, the frozen-backbone LM objectives, and training loops."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..corpus.core import Corpus
from ..corpus.vocab import EOS
from ..errors import ContractError
from ..numerics import AdafactorConfig, AdafactorState, Tensor, adafactor_step, backward, cross_entropy, no_grad
from ..numerics.rng import make_rng
from .transformer import DECODER_ONLY, ENCODER_DECODER, LmModel, SoftPrompt, target_mask


def init_soft_prompt(site: str, length: int, model: LmModel, seed: int = 123) -> SoftPrompt:
    """Prompt whose rows are copies of uniformly sampled rows of the site's embedding table."""
    if length < 0:
        raise ContractError("prompt length must be non-negative")
    table = model.site_table(site).data
    low = 4 if table.shape[0] > 4 else 0
    rows = make_rng(seed).integers(low, table.shape[0], size=length)
    emb = Tensor(table[rows].copy(), requires_grad=True, name=f"prompt.{site}")
    return SoftPrompt(site, emb)


_SITE_OFFSET = {"input": 0, "encoder": 1, "decoder": 2}


def add_prompts(model: LmModel, lengths: dict[str, int], seed: int = 123) -> LmModel:
    # a fixed offset per site keeps each prompt independent of which others exist
    for site, length in sorted(lengths.items()):
        model.attach(init_soft_prompt(site, length, model, seed + _SITE_OFFSET.get(site, 0)))
    return model


def trainable_params(model: LmModel) -> list[Tensor]:
    return [p.embeddings for _, p in sorted(model.prompts.items()) if p.length > 0]


def lm_loss(model: LmModel, targets: Sequence[Sequence[int]], sources=None) -> Tensor:
    """Mean next-token cross-entropy over the real target positions of a batch."""
    if any(len(t) == 0 for t in targets):
        raise ContractError("cannot compute an LM loss on an empty sequence")
    ids, mask = target_mask(targets)
    return cross_entropy(model.logits(targets, sources), ids, mask)


def forward_loss_single_prompt(model: LmModel, x: Sequence[int]) -> Tensor:
    """Decoder-only objective over ``[S_in; <s>; x]``; only the n real tokens carry loss."""
    if model.config.architecture != DECODER_ONLY:
        raise ContractError("single-prompt objective needs a decoder_only model")
    return lm_loss(model, [list(x)])


def forward_loss_enc_dec_prompt(model: LmModel, x: Sequence[int], source: Sequence[int] | None = None) -> Tensor:
    """Encoder-decoder objective with prompts on both stacks.

    The encoder reads ``[S_en; source]`` (``source`` defaults to the whole of
    ``x``) and the decoder reads ``[S_de; <s>; x_1 .. x_{n-1}]``.
    """
    if model.config.architecture != ENCODER_DECODER:
        raise ContractError("encoder-decoder objective needs an encoder_decoder model")
    return lm_loss(model, [list(x)], [list(x if source is None else source)])


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainOptions:
    epochs: int = 20
    batch_size: int = 10
    lr: float = 0.15
    seed: int = 123
    warmup_steps: int = 500
    weight_decay: float = 0.1
    eps: tuple[float, float] = (1e-30, 1e-3)
    clip_threshold: float = 1.0
    decay_rate: float = -0.8

    def optimizer_state(self) -> AdafactorState:
        return AdafactorState(
            AdafactorConfig(
                lr=self.lr,
                eps=tuple(self.eps),
                clip_threshold=self.clip_threshold,
                decay_rate=self.decay_rate,
                weight_decay=self.weight_decay,
                warmup_steps=self.warmup_steps,
            )
        )


def sequences(data: Corpus | Iterable) -> list[list[int]]:
    """Training sequences (token ids + end-of-sequence) from a tokenized corpus or id lists."""
    out = []
    for item in data:
        ids = item.token_ids if hasattr(item, "token_ids") else item
        if ids is None:
            raise ContractError("corpus is not tokenized")
        out.append(list(ids) + [EOS])
    return out


def mean_loss(model: LmModel, seqs: list[list[int]], batch_size: int = 64) -> float:
    total, count = 0.0, 0
    with no_grad():
        for i in range(0, len(seqs), batch_size):
            chunk = seqs[i : i + batch_size]
            n = sum(len(s) for s in chunk)
            total += lm_loss(model, chunk).item() * n
            count += n
    return total / count


def _write_log(path, records) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def train_prompts(
    model: LmModel,
    train: Corpus | Sequence,
    val: Corpus | Sequence,
    opts: TrainOptions | None = None,
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
) -> list[dict]:
    """Tune the soft prompts with Adafactor while the backbone stays frozen.

    The prompts from the epoch with the lowest validation loss are restored
    into ``model`` (and written to ``checkpoint_path``) at the end.
    """
    opts = opts or TrainOptions()
    train_seqs, val_seqs = sequences(train), sequences(val)
    if not train_seqs:
        raise ContractError("training corpus is empty")
    model.set_backbone_trainable(False)
    params = trainable_params(model)
    state = opts.optimizer_state()
    rng = make_rng(opts.seed, 1)
    log: list[dict] = []
    best_val, best = np.inf, [p.data.copy() for p in params]
    for epoch in range(1, opts.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(train_seqs))
        batch_losses = []
        for start in range(0, len(order), opts.batch_size):
            batch = [train_seqs[i] for i in order[start : start + opts.batch_size]]
            loss = lm_loss(model, batch)
            batch_losses.append(loss.item())
            if params:
                backward(loss)
                adafactor_step(params, state)
        val_loss = mean_loss(model, val_seqs) if val_seqs else float("nan")
        log.append(
            {
                "epoch": epoch,
                "train_loss": float(np.mean(batch_losses)),
                "val_loss": val_loss,
                "wall_seconds": time.perf_counter() - t0,
            }
        )
        if val_loss < best_val or not val_seqs:
            best_val = val_loss
            best = [p.data.copy() for p in params]
    for p, saved in zip(params, best):
        p.data[...] = saved
    if checkpoint_path is not None:
        model.save(checkpoint_path, {"train_options": asdict(opts), "best_val_loss": best_val})
    _write_log(log_path, log)
    return log


@dataclass
class PretrainOptions:
    epochs: int = 8
    batch_size: int = 16
    lr: float = 0.01
    seed: int = 123
    warmup_steps: int = 50


def pretrain_backbone(
    model: LmModel,
    train: Corpus | Sequence,
    opts: PretrainOptions | None = None,
    log_path: str | Path | None = None,
) -> list[dict]:
    """LM-adapt the backbone with every weight trainable (no prompts attached).

    Encoder-decoder backbones see a random-length leading prefix of each
    sequence on the encoder and reconstruct the full sequence on the decoder.
    """
    opts = opts or PretrainOptions()
    seqs = sequences(train)
    if not seqs:
        raise ContractError("training corpus is empty")
    if model.prompts:
        raise ContractError("pretraining expects a model without prompts")
    model.set_backbone_trainable(True)
    params = [model.params[k] for k in sorted(model.params)]
    state = AdafactorState(AdafactorConfig(lr=opts.lr, weight_decay=0.0, warmup_steps=opts.warmup_steps))
    rng = make_rng(opts.seed, 2)
    log = []
    for epoch in range(1, opts.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(seqs))
        losses = []
        for start in range(0, len(order), opts.batch_size):
            batch = [seqs[i] for i in order[start : start + opts.batch_size]]
            sources = None
            if model.is_encoder_decoder:
                # prefix excludes the end-of-sequence token
                sources = [s[: int(rng.integers(1, max(2, len(s))))] for s in batch]
            loss = lm_loss(model, batch, sources)
            losses.append(loss.item())
            backward(loss)
            adafactor_step(params, state)
        log.append({"epoch": epoch, "train_loss": float(np.mean(losses)), "wall_seconds": time.perf_counter() - t0})
    model.set_backbone_trainable(False)
    _write_log(log_path, log)
    return log

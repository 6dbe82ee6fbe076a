"""Miniature encoder-decoder and decoder-only language models with soft prompts."""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus.vocab import EOS, PAD, START
from ..errors import ContractError
from ..numerics import Tensor, concat, embedding, no_grad, rms_norm, take
from ..numerics import checkpoint as ckpt
from ..numerics.rng import make_rng
from . import layers

ENCODER_DECODER = "encoder_decoder"
DECODER_ONLY = "decoder_only"
SITES = {ENCODER_DECODER: ("encoder", "decoder"), DECODER_ONLY: ("input",)}


@dataclass
class ModelConfig:
    vocab_size: int
    embed_dim: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ff_dim: int = 256
    max_len: int = 64
    architecture: str = ENCODER_DECODER
    # tokens of each training sequence shown to the encoder (None: the whole sequence)
    source_len: int | None = 4

    def __post_init__(self):
        if self.architecture not in SITES:
            raise ContractError(f"unknown architecture {self.architecture!r}")
        if self.embed_dim % self.n_heads:
            raise ContractError("embed_dim must be divisible by n_heads")
        if self.vocab_size < 5:
            raise ContractError("vocab_size must be at least 5")


@dataclass
class SoftPrompt:
    site: str
    embeddings: Tensor

    @property
    def length(self) -> int:
        return self.embeddings.shape[0]


class LmModel:
    """Frozen backbone plus up to two soft prompts keyed by site."""

    def __init__(self, config: ModelConfig, seed: int = 123, params: dict[str, np.ndarray] | None = None):
        self.config = config
        self.params: dict[str, Tensor] = {}
        self.prompts: dict[str, SoftPrompt] = {}
        if params is None:
            self._init_params(make_rng(seed))
        else:
            self.params = {k: Tensor(np.array(v), name=k) for k, v in params.items()}

    @property
    def is_encoder_decoder(self) -> bool:
        return self.config.architecture == ENCODER_DECODER

    # -- construction ---------------------------------------------------------

    def _init_params(self, rng) -> None:
        c = self.config
        p = self.params
        d = c.embed_dim
        out_scale = 1.0 / math.sqrt(2 * c.n_layers)
        stacks = ("enc", "dec") if self.is_encoder_decoder else ("dec",)
        for stack in stacks:
            p[f"{stack}.tok_emb"] = Tensor(rng.normal(0.0, 1.0, (c.vocab_size, d)), name=f"{stack}.tok_emb")
            p[f"{stack}.pos_emb"] = Tensor(rng.normal(0.0, 0.1, (c.max_len, d)), name=f"{stack}.pos_emb")
            for i in range(c.n_layers):
                pre = f"{stack}.{i}"
                layers.init_norm(p, f"{pre}.ln1", d)
                layers.init_attention(p, f"{pre}.attn", d, rng, out_scale)
                if stack == "dec" and self.is_encoder_decoder:
                    layers.init_norm(p, f"{pre}.lnx", d)
                    layers.init_attention(p, f"{pre}.cross", d, rng, out_scale)
                layers.init_norm(p, f"{pre}.ln2", d)
                layers.init_ffn(p, f"{pre}.ff", d, c.ff_dim, rng, out_scale)
            layers.init_norm(p, f"{stack}.ln_f", d)
        p["lm_head"] = Tensor(rng.normal(0.0, 1.0 / math.sqrt(d), (d, c.vocab_size)), name="lm_head")

    def site_table(self, site: str) -> Tensor:
        if site not in SITES[self.config.architecture]:
            raise ContractError(f"site {site!r} is invalid for a {self.config.architecture} model")
        return self.params["enc.tok_emb" if site == "encoder" else "dec.tok_emb"]

    def attach(self, prompt: SoftPrompt) -> None:
        self.site_table(prompt.site)
        if prompt.embeddings.ndim != 2 or prompt.embeddings.shape[1] != self.config.embed_dim:
            raise ContractError(f"prompt must be (length, {self.config.embed_dim})")
        self.prompts[prompt.site] = prompt

    def prompt_length(self, site: str) -> int:
        prompt = self.prompts.get(site)
        return 0 if prompt is None else prompt.length

    def set_backbone_trainable(self, flag: bool) -> None:
        for t in self.params.values():
            t.requires_grad = flag
            t.grad = None

    def backbone_checksum(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name].data).tobytes())
        return h.hexdigest()

    # -- forward --------------------------------------------------------------

    def _embed(self, stack: str, site: str, ids: np.ndarray) -> Tensor:
        B, T = ids.shape
        x = embedding(self.params[f"{stack}.tok_emb"], ids) + take(self.params[f"{stack}.pos_emb"], slice(0, T))
        prompt = self.prompts.get(site)
        if prompt is None or prompt.length == 0:
            return x
        tiled = Tensor(np.ones((B, 1, 1))) * prompt.embeddings
        return concat([tiled, x], axis=1)

    def _check_lengths(self, total: int) -> None:
        if total > self.config.max_len:
            raise ContractError(f"sequence of {total} positions exceeds max_len {self.config.max_len}")

    def encode(self, sources: Sequence[Sequence[int]]) -> tuple[Tensor, np.ndarray]:
        c = self.config
        ids, lengths = pad_batch(sources)
        l_en = self.prompt_length("encoder")
        self._check_lengths(l_en + ids.shape[1])
        x = self._embed("enc", "encoder", ids)
        valid = np.arange(l_en + ids.shape[1])[None, :] < (l_en + lengths)[:, None]
        mask = layers.key_mask(valid)
        for i in range(c.n_layers):
            x = layers.encoder_layer(self.params, f"enc.{i}", x, mask, c.n_heads)
        return rms_norm(x, self.params["enc.ln_f"]), valid

    def decode(
        self,
        dec_inputs: Sequence[Sequence[int]],
        memory: tuple[Tensor, np.ndarray] | None = None,
    ) -> Tensor:
        """Logits (B, T, V) for every non-prompt decoder position."""
        c = self.config
        ids, lengths = pad_batch(dec_inputs)
        site = "decoder" if self.is_encoder_decoder else "input"
        l = self.prompt_length(site)
        self._check_lengths(l + ids.shape[1])
        x = self._embed("dec", site, ids)
        valid = np.arange(l + ids.shape[1])[None, :] < (l + lengths)[:, None]
        self_mask = layers.causal_key_mask(valid)
        enc_out, cross_mask = None, None
        if memory is not None:
            enc_out, enc_valid = memory
            cross_mask = layers.key_mask(enc_valid)
        for i in range(c.n_layers):
            x = layers.decoder_layer(self.params, f"dec.{i}", x, self_mask, c.n_heads, enc_out, cross_mask)
        x = rms_norm(x, self.params["dec.ln_f"])
        if l:
            x = take(x, (slice(None), slice(l, None)))
        return x @ self.params["lm_head"]

    def sources_for(self, targets: Sequence[Sequence[int]]) -> list[list[int]]:
        """Encoder inputs implied by ``config.source_len`` (a trailing ``</s>`` is never shown)."""
        k = self.config.source_len
        out = []
        for t in targets:
            t = list(t)
            if len(t) > 1 and t[-1] == EOS:
                t = t[:-1]
            out.append(t if k is None else t[: max(1, k)])
        return out

    def logits(
        self,
        targets: Sequence[Sequence[int]],
        sources: Sequence[Sequence[int]] | None = None,
    ) -> Tensor:
        """Teacher-forced logits predicting each row of ``targets`` (B, max_n, V)."""
        dec_inputs = [[START] + list(t[:-1]) for t in targets]
        memory = None
        if self.is_encoder_decoder:
            memory = self.encode(self.sources_for(targets) if sources is None else sources)
        return self.decode(dec_inputs, memory)

    # -- persistence ----------------------------------------------------------

    def state_dict(self, include_prompts: bool = True) -> dict[str, np.ndarray]:
        out = {k: v.data for k, v in self.params.items()}
        if include_prompts:
            for site, prompt in self.prompts.items():
                out[f"prompt.{site}"] = prompt.embeddings.data
        return out

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        meta = {"model": asdict(self.config), "prompt_sites": {s: p.length for s, p in self.prompts.items()}}
        meta.update(extra or {})
        ckpt.save(path, self.state_dict(), meta)

    @classmethod
    def load(cls, path: str | Path) -> tuple["LmModel", dict]:
        arrays, meta = ckpt.load(path)
        cfg = ModelConfig(**meta["model"])
        backbone = {k: v for k, v in arrays.items() if not k.startswith("prompt.")}
        model = cls(cfg, params=backbone)
        for site in meta.get("prompt_sites", {}):
            model.attach(SoftPrompt(site, Tensor(arrays[f"prompt.{site}"], requires_grad=True, name=f"prompt.{site}")))
        return model, meta


def pad_batch(seqs: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(s) for s in seqs], dtype=np.int64)
    if len(seqs) == 0 or lengths.min() == 0:
        raise ContractError("every sequence in a batch needs at least one token")
    ids = np.full((len(seqs), int(lengths.max())), PAD, dtype=np.int64)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
    return ids, lengths


def target_mask(targets: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    ids, lengths = pad_batch(targets)
    mask = np.arange(ids.shape[1])[None, :] < lengths[:, None]
    return ids, mask


def token_nll(model: LmModel, targets: Sequence[Sequence[int]], sources=None) -> list[np.ndarray]:
    """Per-token negative log-likelihood of each target row (no sampling filters)."""
    with no_grad():
        z = model.logits(targets, sources).data
    shifted = z - z.max(axis=-1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = []
    for i, t in enumerate(targets):
        out.append(-logp[i, np.arange(len(t)), np.asarray(t)])
    return out

"""Nucleus sampling and expert/anti-expert steered decoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus.core import Corpus, Review
from .corpus.vocab import EOS, START, Vocabulary
from .errors import ContractError
from .model.transformer import LmModel
from .numerics import Tensor, no_grad
from .numerics.rng import make_rng


@dataclass
class GenerationParams:
    max_new_tokens: int = 20
    temperature: float = 1.0
    top_p: float = 0.8
    top_k: int = 0
    no_repeat_ngram_size: int = 1
    prefix_len: int = 4
    seed: int = 123

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise ContractError(f"top_p must lie in (0, 1], got {self.top_p}")
        if self.temperature <= 0:
            raise ContractError("temperature must be positive")
        if self.top_k < 0 or self.max_new_tokens < 0 or self.no_repeat_ngram_size < 0:
            raise ContractError("top_k, max_new_tokens and no_repeat_ngram_size must be non-negative")


@dataclass
class SteeringParams:
    alpha: float = 1.2
    temperature: float = 1.1
    filter_p: float = 1.0
    p: float = 0.9
    top_k: int = 0
    seed: int = 123

    def __post_init__(self):
        for name in ("filter_p", "p"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ContractError(f"{name} must lie in (0, 1], got {v}")
        if self.temperature <= 0:
            raise ContractError("temperature must be positive")

    @classmethod
    def positive(cls, **overrides) -> "SteeringParams":
        return cls(**{"alpha": 1.2, "temperature": 1.1, "filter_p": 1.0, "p": 0.9, **overrides})

    @classmethod
    def negative(cls, **overrides) -> "SteeringParams":
        return cls(**{"alpha": 1.2, "temperature": 1.8, "filter_p": 0.9, "p": 0.9, **overrides})


# ---------------------------------------------------------------------------
# filters
# ---------------------------------------------------------------------------


def _softmax(z: np.ndarray) -> np.ndarray:
    if np.isnan(z).any():
        raise ContractError("logits contain NaN")
    e = np.exp(z - z.max())
    return e / e.sum()


def nucleus_mask(probs: np.ndarray, p: float) -> np.ndarray:
    """Smallest descending-probability prefix whose mass reaches ``p`` (ties: lower id first)."""
    if p <= 0:
        raise ContractError(f"nucleus threshold must be positive, got {p}")
    order = np.argsort(-probs, kind="stable")
    keep = np.zeros(probs.shape, dtype=bool)
    if p >= 1.0:
        keep[:] = True
        return keep
    cum = np.cumsum(probs[order])
    k = min(int(np.searchsorted(cum, p, side="left")) + 1, probs.size)
    keep[order[:k]] = True
    return keep


def top_p_filter(probs: np.ndarray, p: float) -> np.ndarray:
    if p <= 0 or p > 1:
        raise ContractError(f"top_p must lie in (0, 1], got {p}")
    if p == 1.0:
        return probs.copy()
    kept = np.where(nucleus_mask(probs, p), probs, 0.0)
    return kept / kept.sum()


def top_k_filter(probs: np.ndarray, k: int) -> np.ndarray:
    if k <= 0 or k >= probs.size:
        return probs.copy()
    order = np.argsort(-probs, kind="stable")
    kept = np.zeros_like(probs)
    kept[order[:k]] = probs[order[:k]]
    return kept / kept.sum()


def banned_tokens(context: Sequence[int], n: int) -> set[int]:
    """Tokens that would repeat an n-gram already present in ``context``.

    End-of-sequence is never banned so generation can always stop.
    """
    if n <= 0 or len(context) < n - 1:
        return set()
    context = list(context)
    if n == 1:
        banned = set(context)
    else:
        key = tuple(context[len(context) - n + 1 :])
        banned = {
            context[i + n - 1]
            for i in range(len(context) - n + 1)
            if tuple(context[i : i + n - 1]) == key
        }
    banned.discard(EOS)
    return banned


def finalize_distribution(
    logits: np.ndarray, temperature: float, top_k: int, top_p: float, banned: set[int] | None = None
) -> np.ndarray:
    """Bans, temperature, softmax, top-k, then nucleus; shared by plain and steered decoding."""
    z = logits
    if banned:
        z = z.copy()
        z[list(banned)] = -np.inf
    probs = _softmax(z / temperature)
    if top_k:
        probs = top_k_filter(probs, top_k)
    return top_p_filter(probs, top_p)


def steered_distribution(
    z: np.ndarray,
    z_plus: np.ndarray,
    z_minus: np.ndarray,
    sp: SteeringParams,
    banned: set[int] | None = None,
) -> np.ndarray:
    """``softmax((filter(z) + alpha (z+ - z-)) / T)`` followed by a nucleus cut at ``sp.p``.

    ``filter`` sets base logits outside the ``filter_p`` nucleus of
    ``softmax(z)`` to ``-inf``.
    """
    z, z_plus, z_minus = (np.asarray(a, dtype=np.float64) for a in (z, z_plus, z_minus))
    if not z.shape == z_plus.shape == z_minus.shape:
        raise ContractError(f"logit lengths differ: {z.shape}, {z_plus.shape}, {z_minus.shape}")
    if sp.filter_p < 1.0:
        z = np.where(nucleus_mask(_softmax(z), sp.filter_p), z, -np.inf)
    combined = z + sp.alpha * (z_plus - z_minus)
    return finalize_distribution(combined, sp.temperature, sp.top_k, sp.p, banned)


def sample_token(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw; zero-probability tokens have empty intervals and are never chosen."""
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    i = min(i, probs.size - 1)
    while probs[i] <= 0.0:
        i -= 1
    return i


# ---------------------------------------------------------------------------
# model-driven distributions
# ---------------------------------------------------------------------------


def condition(model: LmModel, prefixes: Sequence[Sequence[int]]):
    """Encoder states for the prefixes (``None`` for decoder-only models)."""
    if not model.is_encoder_decoder:
        return None
    with no_grad():
        return model.encode([list(p) for p in prefixes])


def next_logits(
    model: LmModel,
    prefixes: Sequence[Sequence[int]],
    generated: Sequence[Sequence[int]],
    memory=None,
) -> np.ndarray:
    """Raw next-token logits (B, V) given each row's prefix and its continuation so far."""
    if model.is_encoder_decoder and memory is None:
        memory = condition(model, prefixes)
    dec_inputs = [[START] + list(p) + list(g) for p, g in zip(prefixes, generated)]
    with no_grad():
        z = model.decode(dec_inputs, memory).data
    last = np.array([len(d) - 1 for d in dec_inputs])
    return z[np.arange(len(dec_inputs)), last]


def next_distribution(
    model: LmModel, context: Sequence[int], params: GenerationParams, generated: Sequence[int] = ()
) -> np.ndarray:
    """Filtered next-token distribution for one row; ``context`` is the conditioning prefix."""
    z = next_logits(model, [context], [generated])[0]
    banned = banned_tokens(list(context) + list(generated), params.no_repeat_ngram_size)
    return finalize_distribution(z, params.temperature, params.top_k, params.top_p, banned)


@dataclass
class Generators:
    """One plain model, or a base/expert/anti-expert triple for steering."""

    base: LmModel
    expert: LmModel | None = None
    anti_expert: LmModel | None = None
    names: dict = field(default_factory=dict)

    @property
    def steered(self) -> bool:
        return self.anti_expert is not None


def _capacity(model: LmModel, prefix_len: int) -> int:
    site = "decoder" if model.is_encoder_decoder else "input"
    return model.config.max_len - model.prompt_length(site) - 1 - prefix_len


def generate(
    models: LmModel | Generators,
    inputs: Corpus,
    params: GenerationParams,
    vocab: Vocabulary,
    label: str | None = None,
    steering: SteeringParams | None = None,
    source_model: str = "",
    batch_size: int = 64,
) -> Corpus:
    """Continue the first ``params.prefix_len`` tokens of every input review.

    Each input ``i`` owns the random stream ``(seed, i)``. With a steering
    triple, ``steering`` replaces the temperature/nucleus settings of
    ``params``; the n-gram ban still applies to the combined distribution.
    """
    if len(inputs) == 0:
        raise ContractError("generate() needs at least one input review")
    gens = models if isinstance(models, Generators) else Generators(models)
    if gens.steered and (gens.expert is None or steering is None):
        raise ContractError("steered generation needs expert, anti-expert and SteeringParams")
    seed = steering.seed if gens.steered else params.seed
    out: list[Review] = []
    for start in range(0, len(inputs), batch_size):
        chunk = inputs.reviews[start : start + batch_size]
        prefixes = []
        for r in chunk:
            ids = r.token_ids if r.token_ids is not None else vocab.encode(r.text)
            prefixes.append(list(ids[: params.prefix_len]) or [EOS])
        rngs = [make_rng(seed, start + j) for j in range(len(chunk))]
        conts = _generate_batch(gens, prefixes, params, steering, rngs)
        for j, (r, p, c) in enumerate(zip(chunk, prefixes, conts)):
            toks = [t for t in p + c if t != EOS]
            out.append(
                Review(
                    text=vocab.decode(toks),
                    label=label if label is not None else r.label,
                    token_ids=toks,
                    meta={"source_model": source_model, "input_index": start + j},
                )
            )
    return Corpus(out, inputs.split, f"generated:{source_model}")


def _generate_batch(gens: Generators, prefixes, params: GenerationParams, steering, rngs) -> list[list[int]]:
    roles = [gens.base] + ([gens.expert, gens.anti_expert] if gens.steered else [])
    memories = {}
    for m in roles:
        if id(m) not in memories:
            memories[id(m)] = condition(m, prefixes)
    limit = min(params.max_new_tokens, *(_capacity(m, max(len(p) for p in prefixes)) for m in roles))
    conts: list[list[int]] = [[] for _ in prefixes]
    active = list(range(len(prefixes)))
    for _ in range(max(limit, 0)):
        if not active:
            break
        cache = {}
        for m in roles:
            if id(m) in cache:
                continue
            mem = memories[id(m)]
            if mem is not None:
                enc, valid = mem
                mem = (Tensor(enc.data[active]), valid[active])
            cache[id(m)] = next_logits(m, [prefixes[i] for i in active], [conts[i] for i in active], mem)
        still = []
        for row, i in enumerate(active):
            banned = banned_tokens(prefixes[i] + conts[i], params.no_repeat_ngram_size)
            z = cache[id(gens.base)][row]
            if gens.steered:
                probs = steered_distribution(
                    z, cache[id(gens.expert)][row], cache[id(gens.anti_expert)][row], steering, banned
                )
            else:
                probs = finalize_distribution(z, params.temperature, params.top_k, params.top_p, banned)
            tok = sample_token(probs, rngs[i])
            conts[i].append(tok)
            if tok != EOS:
                still.append(i)
        active = still
    return conts

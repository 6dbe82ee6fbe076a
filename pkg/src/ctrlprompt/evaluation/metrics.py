"""Fluency, diversity, memorisation and similarity metrics over tokenized corpora."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError, UndefinedRatioError

Tokens = Sequence  # a whitespace-tokenizable string or a sequence of hashable tokens


def _tokens(item) -> list:
    if isinstance(item, str):
        return item.split()
    if hasattr(item, "token_ids") and item.token_ids is not None:
        return list(item.token_ids)
    if hasattr(item, "text"):
        return item.text.split()
    return list(item)


# ---------------------------------------------------------------------------
# perplexity
# ---------------------------------------------------------------------------


def perplexity(model, corpus: Iterable, batch_size: int = 64) -> float:
    """``exp(total NLL / total tokens)`` of the corpus under the model's unfiltered next-token distribution.

    ``model`` needs a ``token_nll(sequences) -> list of per-token NLL arrays``
    method, or must be an ``LmModel``. Every sequence is scored with its
    end-of-sequence token, as in training.
    """
    from ..model.prompting import sequences
    from ..model.transformer import token_nll

    seqs = sequences(corpus)
    if not seqs:
        raise ContractError("perplexity of an empty corpus is undefined")
    scorer = getattr(model, "token_nll", None) or (lambda chunk: token_nll(model, chunk))
    total, count = 0.0, 0
    for i in range(0, len(seqs), batch_size):
        for nll in scorer(seqs[i : i + batch_size]):
            total += float(np.sum(nll))
            count += len(nll)
    return math.exp(total / count)


# ---------------------------------------------------------------------------
# n-gram statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NgramSet:
    n: int
    grams: frozenset
    total_count: int

    def __post_init__(self):
        if self.n < 1:
            raise ContractError("n must be at least 1")
        if len(self.grams) > self.total_count:
            raise ContractError("more unique n-grams than n-gram occurrences")

    def __len__(self) -> int:
        return len(self.grams)

    def merge(self, other: "NgramSet") -> "NgramSet":
        if other.n != self.n:
            raise ContractError("cannot merge n-gram sets of different order")
        return NgramSet(self.n, self.grams | other.grams, self.total_count + other.total_count)


def ngram_set(texts: Iterable, n: int) -> NgramSet:
    if n < 1:
        raise ContractError("n must be at least 1")
    grams, total = set(), 0
    for text in texts:
        toks = _tokens(text)
        for i in range(len(toks) - n + 1):
            grams.add(tuple(toks[i : i + n]))
            total += 1
    return NgramSet(n, frozenset(grams), total)


def distinct_n(texts: Iterable, n: int) -> float:
    """Corpus-level unique n-grams over total n-grams (texts shorter than n add nothing)."""
    s = ngram_set(texts, n)
    if s.total_count == 0:
        raise UndefinedRatioError(f"no text has {n} or more tokens")
    return len(s.grams) / s.total_count


def ngram_overlap(generated: Iterable, reference: Iterable, n: int, denominator: str = "generated") -> float:
    """Percentage of unique generated n-grams that also occur in the reference corpus.

    ``denominator="reference"`` normalizes by the reference's unique n-grams instead.
    """
    gen, ref = ngram_set(generated, n), ngram_set(reference, n)
    shared = len(gen.grams & ref.grams)
    if denominator == "generated":
        base = len(gen.grams)
    elif denominator == "reference":
        base = len(ref.grams)
    else:
        raise ContractError(f"unknown overlap denominator {denominator!r}")
    if base == 0:
        raise UndefinedRatioError(f"the {denominator} corpus has no {n}-grams")
    return 100.0 * shared / base


def overlap_table(generated: Iterable, reference: Iterable, ns: Sequence[int] = (2, 3, 4, 5)) -> dict[int, float]:
    generated, reference = list(generated), list(reference)
    return {n: ngram_overlap(generated, reference, n) for n in ns}


# ---------------------------------------------------------------------------
# greedy embedding matching
# ---------------------------------------------------------------------------


@dataclass
class SimilarityScore:
    precision: float
    recall: float
    f1: float
    pairs: int
    skipped: int


Embedder = Callable[[list], np.ndarray]


def table_embedder(table: np.ndarray, lookup: Callable[[object], int] | None = None) -> Embedder:
    """Embed tokens as rows of ``table``; ``lookup`` maps a token to its row (identity for ids)."""
    table = np.asarray(table, dtype=np.float64)

    def embed(tokens: list) -> np.ndarray:
        rows = [t if lookup is None else lookup(t) for t in tokens]
        return table[np.asarray(rows, dtype=np.int64)]

    return embed


def _unit_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def pair_similarity(cand_vecs: np.ndarray, ref_vecs: np.ndarray) -> tuple[float, float, float]:
    sim = _unit_rows(cand_vecs) @ _unit_rows(ref_vecs).T
    p = float(sim.max(axis=1).mean())
    r = float(sim.max(axis=0).mean())
    f = 2 * p * r / (p + r) if p + r != 0 else 0.0
    return p, r, f


def greedy_match_similarity(candidates: Sequence, references: Sequence, embedder: Embedder) -> SimilarityScore:
    """Mean over pairs of greedy max-cosine precision, recall and F1; empty pairs are skipped."""
    if len(candidates) != len(references):
        raise ContractError(f"{len(candidates)} candidates for {len(references)} references")
    scores, skipped = [], 0
    for cand, ref in zip(candidates, references):
        c, r = _tokens(cand), _tokens(ref)
        if not c or not r:
            skipped += 1
            continue
        scores.append(pair_similarity(embedder(c), embedder(r)))
    if skipped:
        warnings.warn(f"skipped {skipped} pair(s) with an empty side", stacklevel=2)
    if not scores:
        raise UndefinedRatioError("every candidate/reference pair was empty")
    p, r, f = np.mean(np.array(scores), axis=0)
    return SimilarityScore(float(p), float(r), float(f), len(scores), skipped)

"""Synthetic two-lexicon review corpus for desk-scale runs.

Every class samples tokens i.i.d. from its own unigram profile: with
probability ``exclusive_mass`` a Zipf-weighted draw from the class-exclusive
lexicon, otherwise a Zipf-weighted draw from the shared lexicon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics.rng import make_rng
from .core import LABELS, Corpus, Review, split_by_ratio

SHARED_WORDS = (
    "the movie film this was a and it of to is in that show story plot i "
    "watched series episode season actors cast scenes ending character characters "
    "director time just really very some about with for on as one but "
    "first after also then there again when what would could which more "
    "overall much end part music script dialogue sequel version dvd family "
    "night weekend friends kids screen set pace tone"
).split()

EXCLUSIVE_WORDS = {
    "positive": (
        "great love wonderful excellent amazing brilliant enjoyable superb "
        "beautiful fantastic delightful charming hilarious moving perfect "
        "recommend masterpiece gorgeous touching fun memorable stunning "
        "favorite inspiring"
    ).split(),
    "negative": (
        "awful horrible terrible boring waste worst dull poorly bad "
        "disappointing annoying stupid predictable mess painful lame "
        "tedious weak ridiculous pointless forgettable clumsy unwatchable "
        "bland awkward"
    ).split(),
}


@dataclass
class SynthConfig:
    size_per_class: int = 700
    n_shared: int = 60
    n_exclusive: int = 20
    exclusive_mass: float = 0.3
    min_len: int = 6
    max_len: int = 14
    zipf_exponent: float = 1.0
    ratios: tuple[float, float, float] = (5.0, 1.0, 1.0)
    seed: int = 123


def _lexicon(base: list[str], size: int, prefix: str) -> list[str]:
    words = list(base[:size])
    k = 0
    while len(words) < size:
        words.append(f"{prefix}{k}")
        k += 1
    return words


def _zipf(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def lexicons(cfg: SynthConfig) -> tuple[list[str], dict[str, list[str]]]:
    shared = _lexicon(SHARED_WORDS, cfg.n_shared, "w")
    exclusive = {lab: _lexicon(EXCLUSIVE_WORDS[lab], cfg.n_exclusive, lab[:3]) for lab in LABELS}
    return shared, exclusive


def synth_reviews(cfg: SynthConfig) -> Corpus:
    shared, exclusive = lexicons(cfg)
    p_shared = _zipf(len(shared), cfg.zipf_exponent)
    seen: set[str] = set()
    reviews: list[Review] = []
    for ci, label in enumerate(LABELS):
        rng = make_rng(cfg.seed, ci)
        own = exclusive[label]
        p_own = _zipf(len(own), cfg.zipf_exponent)
        made = 0
        while made < cfg.size_per_class:
            n = int(rng.integers(cfg.min_len, cfg.max_len + 1))
            from_own = rng.random(n) < cfg.exclusive_mass
            words = [
                own[rng.choice(len(own), p=p_own)] if flag else shared[rng.choice(len(shared), p=p_shared)]
                for flag in from_own
            ]
            text = " ".join(words)
            if text in seen:
                continue
            seen.add(text)
            rating = int(rng.choice([4, 5])) if label == "positive" else int(rng.choice([1, 2]))
            reviews.append(Review(text=text, rating=rating, label=label))
            made += 1
    return Corpus(reviews, "all", f"synthetic(seed={cfg.seed})")


def synth_corpus(cfg: SynthConfig | None = None) -> dict[str, Corpus]:
    """Balanced labelled corpus split train/validation/test by ``cfg.ratios`` per class."""
    cfg = cfg or SynthConfig()
    return split_by_ratio(synth_reviews(cfg), cfg.ratios, cfg.seed)


_DECOR = ("!!!", ".....", "!", ".", " :)", "?!", " ***")
_OPENERS = ("I'm sure ", "It's true ", "Honestly, ", "", "", "", "We didn't expect it but ")


def synth_raw_records(
    cfg: SynthConfig,
    n_neutral: int = 0,
    n_unrated: int = 0,
    n_duplicates: int = 0,
) -> list[dict]:
    """Raw web-style records (markup, punctuation, contractions) for the preprocessing pipeline.

    ``n_neutral`` extra records carry rating 3, ``n_unrated`` carry no rating
    and ``n_duplicates`` are re-emitted copies of earlier records.
    """
    base = synth_reviews(cfg)
    rng = make_rng(cfg.seed, 99)
    records = []
    for r in base.reviews:
        opener = _OPENERS[int(rng.integers(len(_OPENERS)))]
        tail = _DECOR[int(rng.integers(len(_DECOR)))]
        text = f"{opener}{r.text.capitalize()}{tail}"
        if rng.random() < 0.3:
            text = f"<br>{text}<br />"
        if rng.random() < 0.2:
            text = text.replace(" and ", " &amp; ", 1)
        records.append({"text": text, "rating": r.rating, "label": None})
    pool = base.texts()
    for i in range(n_neutral):
        records.append({"text": f"Neutral take {i}: {pool[i % len(pool)]}", "rating": 3, "label": None})
    for i in range(n_unrated):
        records.append({"text": f"No stars {i}: {pool[-1 - i % len(pool)]}", "rating": None, "label": None})
    if n_duplicates:
        picks = rng.choice(len(base), size=n_duplicates, replace=False)
        for i in picks:
            records.append(dict(records[int(i)]))
    order = rng.permutation(len(records))
    return [records[i] for i in order]

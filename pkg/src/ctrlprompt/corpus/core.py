"""Review records, cleaning, labelling, dedup, downsampling and splitting."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..errors import ContractError, DataError
from ..numerics.rng import make_rng
from .contractions import CONTRACTIONS

LABELS = ("negative", "positive")
SPLITS = ("train", "validation", "test")


@dataclass
class Review:
    text: str
    rating: int | None = None
    label: str | None = None
    token_ids: list[int] | None = None
    meta: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {"text": self.text, "rating": self.rating, "label": self.label}
        rec.update(self.meta)
        return rec


@dataclass
class Corpus:
    reviews: list[Review]
    split: str = "train"
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self) -> Iterator[Review]:
        return iter(self.reviews)

    def __getitem__(self, i):
        return self.reviews[i]

    def texts(self) -> list[str]:
        return [r.text for r in self.reviews]

    def labels(self) -> list[str | None]:
        return [r.label for r in self.reviews]

    def with_label(self, label: str) -> "Corpus":
        return Corpus([r for r in self.reviews if r.label == label], self.split, self.provenance)

    def derive(self, reviews: list[Review], **changes) -> "Corpus":
        return replace(self, reviews=reviews, **changes)


# ---------------------------------------------------------------------------
# cleaning
# ---------------------------------------------------------------------------

_TAG = re.compile(r"<[^>]*>")
_ENTITY = re.compile(r"&#?[0-9a-zA-Z]+;")
_URL = re.compile(r"(?:https?://|www\.)\S+")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'", "´": "'"})
_WITH_APOS = {k: v for k, v in CONTRACTIONS.items() if "'" in k}
_BARE = {k: v for k, v in CONTRACTIONS.items() if "'" not in k}


def _alternation(table: dict[str, str]) -> re.Pattern:
    keys = sorted(table, key=len, reverse=True)
    return re.compile(r"(?<![a-z0-9'])(" + "|".join(re.escape(k) for k in keys) + r")(?![a-z0-9'])")


_WITH_APOS_RE = _alternation(_WITH_APOS)
_BARE_RE = _alternation(_BARE)


def clean_text(raw: str) -> str:
    """Strip markup, expand contractions, drop punctuation, lowercase.

    >>> clean_text("<br>Great movie!!!")
    'great movie'
    >>> clean_text("I'm *very* happy.....")
    'i am very happy'
    """
    text = _TAG.sub(" ", raw)
    text = _ENTITY.sub(" ", text)
    text = _URL.sub(" ", text)
    text = unicodedata.normalize("NFKD", text.translate(_APOSTROPHES))
    text = text.encode("ascii", "ignore").decode("ascii").lower()
    text = _WITH_APOS_RE.sub(lambda m: _WITH_APOS[m.group(1)], text)
    text = text.replace("'", "")
    text = re.sub(r"[^a-z0-9]+", " ", text)
    text = _BARE_RE.sub(lambda m: _BARE[m.group(1)], text)
    return " ".join(text.split())


def label_by_rating(rating: int | None) -> str:
    """Map a 1-5 star rating to ``positive``, ``negative`` or ``discard``."""
    if rating is None:
        return "discard"
    if isinstance(rating, bool) or int(rating) != rating or not 1 <= rating <= 5:
        raise DataError(f"rating must be an integer in 1..5, got {rating!r}")
    if rating > 3:
        return "positive"
    if rating < 3:
        return "negative"
    return "discard"


def dedup_exact(corpus: Corpus) -> Corpus:
    seen: set[str] = set()
    kept = []
    for r in corpus.reviews:
        if r.text in seen:
            continue
        seen.add(r.text)
        kept.append(r)
    return corpus.derive(kept)


# ---------------------------------------------------------------------------
# length-preserving downsampling
# ---------------------------------------------------------------------------

BIN_WIDTH = 5
MAX_BINS = 40


def length_bin(n_tokens: int) -> int:
    return min(n_tokens // BIN_WIDTH, MAX_BINS - 1)


def _largest_remainder(counts: np.ndarray, target: int) -> np.ndarray:
    total = counts.sum()
    exact = counts * target / total
    quota = np.floor(exact).astype(np.int64)
    short = target - int(quota.sum())
    if short:
        order = np.lexsort((np.arange(len(counts)), -(exact - quota)))
        quota[order[:short]] += 1
    return quota


def length_preserving_downsample(pool: Corpus, target_size: int, seed: int) -> Corpus:
    """Sample ``target_size`` reviews without replacement, tracking the pool's length histogram.

    Each token-length bin receives a quota proportional to its empirical
    probability in the pool (largest-remainder rounding); reviews are drawn
    uniformly within their bin. Output keeps pool order.
    """
    n = len(pool)
    if target_size < 0 or target_size > n:
        raise ContractError(f"target_size {target_size} outside [0, {n}]")
    labels = {r.label for r in pool.reviews if r.label is not None}
    if len(labels) > 1:
        raise ContractError(f"downsampling expects a single-label pool, got {sorted(labels)}")
    if target_size == 0:
        return pool.derive([])

    bins = np.array([length_bin(len(r.text.split())) for r in pool.reviews])
    counts = np.bincount(bins, minlength=MAX_BINS)
    quota = _largest_remainder(counts, target_size)
    rng = make_rng(seed)
    chosen: list[int] = []
    for b in range(MAX_BINS):
        if quota[b] == 0:
            continue
        members = np.flatnonzero(bins == b)
        chosen.extend(rng.choice(members, size=int(quota[b]), replace=False).tolist())
    chosen.sort()
    return pool.derive([pool.reviews[i] for i in chosen])


def split_by_ratio(corpus: Corpus, ratios: Sequence[float], seed: int) -> dict[str, Corpus]:
    """Shuffle each label separately and cut it into train/validation/test by ``ratios``."""
    out: dict[str, list[Review]] = {s: [] for s in SPLITS}
    rng = make_rng(seed)
    groups: dict[str | None, list[Review]] = {}
    for r in corpus.reviews:
        groups.setdefault(r.label, []).append(r)
    weights = np.asarray(ratios, dtype=np.float64)
    for label in sorted(groups, key=lambda x: (x is None, x)):
        members = groups[label]
        perm = rng.permutation(len(members))
        sizes = _largest_remainder(weights, len(members)) if members else np.zeros(3, np.int64)
        start = 0
        for split, size in zip(SPLITS, sizes):
            out[split].extend(members[i] for i in perm[start : start + size])
            start += size
    return {s: Corpus(out[s], s, corpus.provenance) for s in SPLITS}


def split_by_counts(corpus: Corpus, per_label: dict[str, int], seed: int) -> dict[str, Corpus]:
    """Cut each label into exactly ``per_label[split]`` reviews per split (after shuffling)."""
    need = sum(per_label.values())
    out: dict[str, list[Review]] = {s: [] for s in per_label}
    rng = make_rng(seed)
    for label in LABELS:
        members = [r for r in corpus.reviews if r.label == label]
        if len(members) < need:
            raise DataError(f"label {label!r} has {len(members)} reviews, {need} required")
        perm = rng.permutation(len(members))
        start = 0
        for split, size in per_label.items():
            out[split].extend(members[i] for i in perm[start : start + size])
            start += size
    return {s: Corpus(out[s], s, corpus.provenance) for s in per_label}


# ---------------------------------------------------------------------------
# line-delimited JSON storage
# ---------------------------------------------------------------------------


def read_corpus(path: str | Path, split: str = "train") -> Corpus:
    path = Path(path)
    reviews = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read corpus ({exc})") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            text = rec.pop("text")
            if not isinstance(text, str):
                raise TypeError("text must be a string")
        except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
            raise DataError(f"{path}:{lineno}: malformed record ({exc})") from exc
        rating = rec.pop("rating", None)
        label = rec.pop("label", None)
        reviews.append(Review(text=text, rating=rating, label=label, meta=rec))
    return Corpus(reviews, split, str(path))


def write_corpus(path: str | Path, corpus: Iterable[Review]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in corpus:
            fh.write(json.dumps(r.to_record(), ensure_ascii=False) + "\n")


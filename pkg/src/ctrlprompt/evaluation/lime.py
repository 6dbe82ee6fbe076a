"""Token-removal LIME: a kernel-weighted ridge surrogate fit on random keep/drop masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..corpus.core import LABELS
from ..errors import ContractError
from ..numerics.rng import make_rng

LIME_STREAM = 11


@dataclass
class Explanation:
    tokens: list[str]
    weights: np.ndarray
    intercept: float
    score: float  # weighted R^2 of the surrogate
    target: str

    def __post_init__(self):
        if len(self.weights) != len(self.tokens):
            raise ContractError("one weight per token position is required")

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.weights), kind="stable")
        return [(self.tokens[i], float(self.weights[i])) for i in order]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "intercept": self.intercept,
            "score": self.score,
            "tokens": [{"token": t, "weight": float(w)} for t, w in zip(self.tokens, self.weights)],
        }


def _as_prob_fn(classifier) -> Callable[[list[str]], np.ndarray]:
    if callable(classifier):
        return classifier
    from ..classifier import predict_proba

    return lambda texts: predict_proba(classifier, texts)


def cosine_distance_to_full(masks: np.ndarray) -> np.ndarray:
    """Cosine distance of each 0/1 mask to the all-ones vector (an empty mask is at distance 1)."""
    kept = masks.sum(axis=1)
    return 1.0 - np.sqrt(kept / masks.shape[1])


def weighted_ridge(x: np.ndarray, y: np.ndarray, w: np.ndarray, alpha: float = 1.0) -> tuple[np.ndarray, float, float]:
    """Ridge with sample weights and an unpenalized intercept; returns (coef, intercept, weighted R^2)."""
    sw = w / w.sum()
    x_mean, y_mean = sw @ x, sw @ y
    xc, yc = x - x_mean, y - y_mean
    gram = (xc * w[:, None]).T @ xc + alpha * np.eye(x.shape[1])
    coef = np.linalg.solve(gram, (xc * w[:, None]).T @ yc)
    intercept = float(y_mean - x_mean @ coef)
    resid = y - (x @ coef + intercept)
    ss_res = float(w @ resid**2)
    ss_tot = float(w @ yc**2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef, intercept, r2


def lime_explain(
    classifier,
    text: str | Sequence[str],
    target_label: str | int = "positive",
    num_samples: int = 5000,
    kernel_width: float = 0.25,
    seed: int = 123,
    alpha: float = 1.0,
) -> Explanation:
    """Per-token influence on ``P(target_label)``.

    ``classifier`` is either a trained classifier model or a callable mapping
    a list of texts to an (N, 2) probability array. Row 0 of the sample
    matrix is always the unperturbed text.
    """
    if num_samples < 10:
        raise ContractError("LIME needs at least 10 perturbation samples")
    tokens = text.split() if isinstance(text, str) else list(text)
    if not tokens:
        raise ContractError("cannot explain an empty text")
    target = LABELS.index(target_label) if isinstance(target_label, str) else int(target_label)
    prob_fn = _as_prob_fn(classifier)
    rng = make_rng(seed, LIME_STREAM)
    masks = (rng.random((num_samples, len(tokens))) < 0.5).astype(np.float64)
    masks[0] = 1.0
    texts = [" ".join(t for t, keep in zip(tokens, row) if keep) for row in masks]
    y = np.asarray(prob_fn(texts), dtype=np.float64)[:, target]
    d = cosine_distance_to_full(masks)
    kernel = np.exp(-(d**2) / kernel_width**2)
    coef, intercept, r2 = weighted_ridge(masks, y, kernel, alpha)
    return Explanation(tokens, coef, intercept, r2, LABELS[target])

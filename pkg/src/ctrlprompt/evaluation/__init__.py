"""Perplexity, Dist-n, n-gram overlap, greedy embedding similarity and LIME."""

from .lime import Explanation, cosine_distance_to_full, lime_explain, weighted_ridge
from .metrics import (
    NgramSet,
    SimilarityScore,
    distinct_n,
    greedy_match_similarity,
    ngram_overlap,
    ngram_set,
    overlap_table,
    pair_similarity,
    perplexity,
    table_embedder,
)
from .report import MetricsReport

__all__ = [
    "Explanation",
    "MetricsReport",
    "NgramSet",
    "SimilarityScore",
    "cosine_distance_to_full",
    "distinct_n",
    "greedy_match_similarity",
    "lime_explain",
    "ngram_overlap",
    "ngram_set",
    "overlap_table",
    "pair_similarity",
    "perplexity",
    "table_embedder",
    "weighted_ridge",
]
